"""Register offsets and descriptor layout for 82599-family controllers.

Only the subset a minimal poll-mode driver touches is defined: reset and
link, one rx and one tx queue, promiscuous control, and the statistics
counters used for throughput reporting.  Offsets are the single-queue (index
0) instances; the helpers parameterize by queue index so a multi-queue
driver can reuse them.
"""

# Register space size of BAR0 on this family.
BAR0_LEN = 0x20000

# Device control / status
CTRL = 0x00000
CTRL_RST = (1 << 26) | (1 << 3)  # link reset + device reset, self-clearing
STATUS = 0x00008

EEC = 0x10010
EEC_ARD = 1 << 9  # EEPROM auto-read done

RDRXCTL = 0x02F00
RDRXCTL_DMAIDONE = 1 << 3

AUTOC = 0x042A0
LINKS = 0x042A4
LINKS_UP = 1 << 30
LINKS_SPEED_MASK = 0x3 << 28
LINKS_SPEED_10G = 0x3 << 28

# Receive path
RXCTRL = 0x03000
RXCTRL_RXEN = 1 << 0
RXPBSIZE0 = 0x03C00
FCTRL = 0x05080
FCTRL_MPE = 1 << 8
FCTRL_UPE = 1 << 9
FCTRL_BAM = 1 << 10


def RDBAL(i: int) -> int:
    return 0x01000 + 0x40 * i


def RDBAH(i: int) -> int:
    return 0x01004 + 0x40 * i


def RDLEN(i: int) -> int:
    return 0x01008 + 0x40 * i


def RDH(i: int) -> int:
    return 0x01010 + 0x40 * i


def SRRCTL(i: int) -> int:
    return 0x01014 + 0x40 * i


def RDT(i: int) -> int:
    return 0x01018 + 0x40 * i


def RXDCTL(i: int) -> int:
    return 0x01028 + 0x40 * i


SRRCTL_DROP_EN = 1 << 28
SRRCTL_BSIZEPKT_2K = 2  # buffer size field, 1 KiB units
RXTX_DCTL_ENABLE = 1 << 25

# Transmit path
DMATXCTL = 0x04A80
DMATXCTL_TE = 1 << 0
HLREG0 = 0x04240
HLREG0_TXCRCEN = 1 << 0


def TDBAL(i: int) -> int:
    return 0x06000 + 0x40 * i


def TDBAH(i: int) -> int:
    return 0x06004 + 0x40 * i


def TDLEN(i: int) -> int:
    return 0x06008 + 0x40 * i


def TDH(i: int) -> int:
    return 0x06010 + 0x40 * i


def TDT(i: int) -> int:
    return 0x06018 + 0x40 * i


def TXDCTL(i: int) -> int:
    return 0x06028 + 0x40 * i


# Station address
RAL0 = 0x0A200
RAH0 = 0x0A204

# Statistics (read-clear in hardware and in the model)
GPRC = 0x04074  # good packets received
GPTC = 0x04080  # good packets transmitted
GORCL = 0x04088  # good octets received, low/high pair
GORCH = 0x0408C
GOTCL = 0x04090  # good octets transmitted, low/high pair
GOTCH = 0x04094
MPC0 = 0x03FA0  # missed packets (receive ring full)

# ---------------------------------------------------------------------------
# Descriptor wire format: 16-byte advanced descriptors, single-buffer packets
# (EOP always set).  Values chosen so every field fits in a non-negative
# int64, letting ring memory be viewed as int64[2 * ring_size].
# ---------------------------------------------------------------------------

DESC_BYTES = 16

# rx write-back, second qword: status_error[31:0] | length[47:32]
RXD_STAT_DD = 1 << 0
RXD_STAT_EOP = 1 << 1
RXD_WB_LEN_SHIFT = 32
RXD_WB_LEN_MASK = 0xFFFF

# tx read format, second qword: cmd_type_len[31:0] | olinfo_status[63:32]
# cmd_type_len: length[19:0] | descriptor type | EOP/IFCS/RS/DEXT command bits
TXD_LEN_MASK = 0xFFFFF
TXD_DTYP_ADV = 0x3 << 20
TXD_CMD_EOP = 1 << 24
TXD_CMD_IFCS = 1 << 25
TXD_CMD_RS = 1 << 27
TXD_CMD_DEXT = 1 << 29
TXD_FLAGS = TXD_DTYP_ADV | TXD_CMD_EOP | TXD_CMD_IFCS | TXD_CMD_RS | TXD_CMD_DEXT
# tx write-back: STA.DD is bit 0 of the status dword (bit 32 of the qword)
TXD_STAT_DD = 1 << 32

MIN_FRAME = 60  # Ethernet minimum without FCS
MAX_FRAME = 2048
