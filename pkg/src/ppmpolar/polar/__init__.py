from .code import CodeSpec, encode, read_code_file, write_code_file
from .crc import CRC14_27CF, CRC16_8D95, CRC16_D175, CrcSpec, crc_append, crc_check
from .decode import (
    DynamicListResult,
    ListCapacityError,
    ListDecodeResult,
    dynamic_list_decode,
    sc_decode,
    sc_decode_frames,
    scl_decode,
)
from .transform import polar_transform

__all__ = [
    "CodeSpec", "encode", "read_code_file", "write_code_file",
    "CrcSpec", "CRC14_27CF", "CRC16_D175", "CRC16_8D95", "crc_append", "crc_check",
    "DynamicListResult", "ListCapacityError", "ListDecodeResult",
    "dynamic_list_decode", "sc_decode", "sc_decode_frames", "scl_decode",
    "polar_transform",
]
