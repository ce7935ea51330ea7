"""Binary wire format and configuration files; the command line lives in :mod:`smhe.cli_io.cli`."""

from smhe.cli_io.config import format_config, load_config, parse_config
from smhe.cli_io.wire import (
    HEADER_SIZE,
    MAGIC,
    VERSION,
    Kind,
    deserialize,
    load_params,
    poly_bytes,
    read_header,
    serialize,
    wire_size,
)
