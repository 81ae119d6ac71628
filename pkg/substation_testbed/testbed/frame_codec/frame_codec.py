# Copyright (c) 2025, Hopnet Communications LLP and contributors
# For license information, please see license.txt

"""
SV / GOOSE Frame Codec

Bit-exact encoding and decoding of IEC 61850 Sampled Values (9-2LE field set)
and GOOSE Ethernet frames.

Wire layout (all integers big-endian):
    dst(6) src(6) [0x8100 TCI(2)] ethertype(2) APPID(2) Length(2) Reserved1(2) Reserved2(2) APDU

The APDU is a definite-length TLV subset with the real 9-2 / 8-1 tag numbers:
    SV:    0x60{ 0x80 noASDU, 0xA2{ 0x30{ 0x80 svID, 0x82 smpCnt, 0x83 confRev,
                                         0x85 smpSynch, 0x87 samples } } }
    GOOSE: 0x61{ 0x80 gocbRef, 0x81 timeAllowedToLive, 0x82 datSet, 0x83 goID,
                 0x84 t, 0x85 stNum, 0x86 sqNum, 0x87 simulation, 0x88 confRev,
                 0x89 ndsCom, 0x8A numDatSetEntries, 0xAB{ 0x83 bool ... } }

Implementation Notes:
- Decoding is strict: tags must appear in the order above, unknown tags are
  rejected, and only minimal length forms are accepted. Everything the decoder
  accepts therefore re-encodes to the identical bytes.
- Every decode failure is a FrameDecodeError carrying the byte offset.
"""

import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

from substation_testbed.config import ETHERTYPE_GOOSE, ETHERTYPE_SV, ETHERTYPE_VLAN, SMP_CNT_MODULO
from substation_testbed.exceptions import FrameDecodeError, FrameEncodeError

SV_SAMPLE_COUNT = 8
SV_SAMPLES_BYTES = SV_SAMPLE_COUNT * 8
MAX_VISIBLE_STRING = 129

U8_MAX = 0xFF
U16_MAX = 0xFFFF
U32_MAX = 0xFFFFFFFF
I32_MIN = -(2**31)
I32_MAX = 2**31 - 1


class FrameKind(Enum):
    SV = "Sv"
    GOOSE = "Goose"
    OTHER = "Other"


@dataclass(frozen=True)
class MacAddress:
    octets: bytes

    def __post_init__(self):
        if not isinstance(self.octets, (bytes, bytearray)) or len(self.octets) != 6:
            raise FrameEncodeError("MAC address must be exactly six octets", field="mac")
        object.__setattr__(self, "octets", bytes(self.octets))

    @classmethod
    def parse(cls, text: str) -> "MacAddress":
        parts = text.replace("-", ":").split(":")
        if len(parts) != 6:
            raise FrameEncodeError(f"Invalid MAC address '{text}'", field="mac")
        try:
            return cls(bytes(int(part, 16) for part in parts))
        except ValueError:
            raise FrameEncodeError(f"Invalid MAC address '{text}'", field="mac")

    @property
    def is_multicast(self) -> bool:
        return bool(self.octets[0] & 0x01)

    def __str__(self) -> str:
        return ":".join(f"{octet:02X}" for octet in self.octets)


@dataclass(frozen=True)
class VlanTag:
    vid: int
    priority: int = 4
    dei: int = 0

    @property
    def tci(self) -> int:
        return (self.priority << 13) | (self.dei << 12) | self.vid

    @classmethod
    def from_tci(cls, tci: int) -> "VlanTag":
        return cls(vid=tci & 0x0FFF, priority=(tci >> 13) & 0x7, dei=(tci >> 12) & 0x1)


@dataclass(frozen=True)
class UtcTimestamp:
    seconds: int
    fraction: int
    quality: int = 0

    @classmethod
    def from_sim_time(cls, epoch_seconds: int, sim_ns: int, quality: int = 0) -> "UtcTimestamp":
        whole, rest = divmod(sim_ns, 1_000_000_000)
        return cls(seconds=epoch_seconds + whole, fraction=(rest << 24) // 1_000_000_000, quality=quality)

    def to_ns(self) -> int:
        """Nanoseconds since the Unix epoch (fraction truncated to ns)"""
        return self.seconds * 1_000_000_000 + (self.fraction * 1_000_000_000 >> 24)


@dataclass(frozen=True)
class SvFrame:
    dst: MacAddress
    src: MacAddress
    app_id: int
    sv_id: str
    smp_cnt: int
    conf_rev: int
    smp_synch: int
    # 4 currents (mA) then 4 voltages (10 mV), each (value, quality)
    samples: Tuple[Tuple[int, int], ...]
    vlan: Optional[VlanTag] = None

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple((int(v), int(q)) for v, q in self.samples))


@dataclass(frozen=True)
class GooseFrame:
    dst: MacAddress
    src: MacAddress
    app_id: int
    gocb_ref: str
    time_allowed_to_live: int
    dat_set: str
    go_id: str
    t: UtcTimestamp
    st_num: int
    sq_num: int
    all_data: Tuple[bool, ...]
    simulation: bool = False
    conf_rev: int = 1
    nds_com: bool = False
    vlan: Optional[VlanTag] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "all_data", tuple(bool(value) for value in self.all_data))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _check_range(value: int, low: int, high: int, name: str):
    if not isinstance(value, int) or isinstance(value, bool) or not low <= value <= high:
        raise FrameEncodeError(f"{name}={value!r} outside [{low}, {high}]", field=name)


def _check_ascii(value: str, name: str, max_len: int):
    if not isinstance(value, str) or not value:
        raise FrameEncodeError(f"{name} must be a non-empty string", field=name)
    if len(value) > max_len:
        raise FrameEncodeError(f"{name} longer than {max_len} characters", field=name)
    if not value.isascii():
        raise FrameEncodeError(f"{name} must be ASCII", field=name)


def _check_common(dst: MacAddress, vlan: Optional[VlanTag], app_id: int):
    if not dst.is_multicast:
        raise FrameEncodeError(f"destination {dst} is not a multicast address", field="dst")
    _check_range(app_id, 0, U16_MAX, "appId")
    if vlan is not None:
        _check_range(vlan.vid, 0, 0x0FFF, "vlan.vid")
        _check_range(vlan.priority, 0, 7, "vlan.priority")
        _check_range(vlan.dei, 0, 1, "vlan.dei")


def validate_sv(frame: SvFrame):
    _check_common(frame.dst, frame.vlan, frame.app_id)
    _check_ascii(frame.sv_id, "svId", 64)
    _check_range(frame.smp_cnt, 0, SMP_CNT_MODULO - 1, "smpCnt")
    _check_range(frame.conf_rev, 0, U32_MAX, "confRev")
    _check_range(frame.smp_synch, 0, U8_MAX, "smpSynch")
    if len(frame.samples) != SV_SAMPLE_COUNT:
        raise FrameEncodeError(f"samples must have exactly {SV_SAMPLE_COUNT} entries", field="samples")
    for index, (value, quality) in enumerate(frame.samples):
        _check_range(value, I32_MIN, I32_MAX, f"samples[{index}].value")
        _check_range(quality, 0, U32_MAX, f"samples[{index}].quality")


def validate_goose(frame: GooseFrame):
    _check_common(frame.dst, frame.vlan, frame.app_id)
    _check_ascii(frame.gocb_ref, "gocbRef", MAX_VISIBLE_STRING)
    _check_ascii(frame.dat_set, "datSet", MAX_VISIBLE_STRING)
    _check_ascii(frame.go_id, "goId", MAX_VISIBLE_STRING)
    _check_range(frame.time_allowed_to_live, 0, U32_MAX, "timeAllowedToLive")
    _check_range(frame.st_num, 1, U32_MAX, "stNum")
    _check_range(frame.sq_num, 0, U32_MAX, "sqNum")
    _check_range(frame.conf_rev, 0, U32_MAX, "confRev")
    _check_range(frame.t.seconds, 0, U32_MAX, "t.seconds")
    _check_range(frame.t.fraction, 0, (1 << 24) - 1, "t.fraction")
    _check_range(frame.t.quality, 0, U8_MAX, "t.quality")
    if not frame.all_data:
        raise FrameEncodeError("allData must not be empty", field="allData")


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

def _encode_length(length: int) -> bytes:
    if length < 0x80:
        return bytes([length])
    if length <= 0xFF:
        return bytes([0x81, length])
    if length <= 0xFFFF:
        return bytes([0x82, length >> 8, length & 0xFF])
    raise FrameEncodeError(f"TLV value of {length} bytes is too long", field="length")


def _tlv(tag: int, value: bytes) -> bytes:
    return bytes([tag]) + _encode_length(len(value)) + value


def _ethernet(dst: MacAddress, src: MacAddress, vlan: Optional[VlanTag], ethertype: int, app_id: int, apdu: bytes) -> bytes:
    header = dst.octets + src.octets
    if vlan is not None:
        header += struct.pack(">HH", ETHERTYPE_VLAN, vlan.tci)
    length = 8 + len(apdu)
    if length > U16_MAX:
        raise FrameEncodeError("APDU too long for the Length field", field="length")
    return header + struct.pack(">HHHHH", ethertype, app_id, length, 0, 0) + apdu


def encode_sv(frame: SvFrame) -> bytes:
    validate_sv(frame)
    samples = b"".join(struct.pack(">iI", value, quality) for value, quality in frame.samples)
    asdu = (
        _tlv(0x80, frame.sv_id.encode("ascii"))
        + _tlv(0x82, struct.pack(">H", frame.smp_cnt))
        + _tlv(0x83, struct.pack(">I", frame.conf_rev))
        + _tlv(0x85, struct.pack(">B", frame.smp_synch))
        + _tlv(0x87, samples)
    )
    apdu = _tlv(0x60, _tlv(0x80, b"\x01") + _tlv(0xA2, _tlv(0x30, asdu)))
    return _ethernet(frame.dst, frame.src, frame.vlan, ETHERTYPE_SV, frame.app_id, apdu)


def encode_goose(frame: GooseFrame) -> bytes:
    validate_goose(frame)
    t = struct.pack(">I", frame.t.seconds) + frame.t.fraction.to_bytes(3, "big") + bytes([frame.t.quality])
    data = b"".join(_tlv(0x83, b"\x01" if value else b"\x00") for value in frame.all_data)
    pdu = (
        _tlv(0x80, frame.gocb_ref.encode("ascii"))
        + _tlv(0x81, struct.pack(">I", frame.time_allowed_to_live))
        + _tlv(0x82, frame.dat_set.encode("ascii"))
        + _tlv(0x83, frame.go_id.encode("ascii"))
        + _tlv(0x84, t)
        + _tlv(0x85, struct.pack(">I", frame.st_num))
        + _tlv(0x86, struct.pack(">I", frame.sq_num))
        + _tlv(0x87, b"\x01" if frame.simulation else b"\x00")
        + _tlv(0x88, struct.pack(">I", frame.conf_rev))
        + _tlv(0x89, b"\x01" if frame.nds_com else b"\x00")
        + _tlv(0x8A, struct.pack(">I", len(frame.all_data)))
        + _tlv(0xAB, data)
    )
    apdu = _tlv(0x61, pdu)
    return _ethernet(frame.dst, frame.src, frame.vlan, ETHERTYPE_GOOSE, frame.app_id, apdu)


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------

class _TlvReader:
    """Cursor over buf[start:end] that reads strictly ordered TLVs"""

    def __init__(self, buf: bytes, start: int, end: int, name: str = "frame", tag_offset: int = 0, declared_end: Optional[int] = None):
        self.buf = buf
        self.pos = start
        self.end = end
        self.name = name
        self.tag_offset = tag_offset
        self.declared_end = end if declared_end is None else declared_end

    def at_end(self) -> bool:
        return self.pos >= self.end

    def _read_length(self) -> int:
        if self.pos >= self.end:
            raise FrameDecodeError("truncated TLV length", self.pos)
        first = self.buf[self.pos]
        if first < 0x80:
            self.pos += 1
            return first
        if first == 0x81:
            if self.pos + 2 > self.end:
                raise FrameDecodeError("truncated TLV length", self.pos)
            length = self.buf[self.pos + 1]
            if length < 0x80:
                raise FrameDecodeError("non-minimal TLV length", self.pos)
            self.pos += 2
            return length
        if first == 0x82:
            if self.pos + 3 > self.end:
                raise FrameDecodeError("truncated TLV length", self.pos)
            length = (self.buf[self.pos + 1] << 8) | self.buf[self.pos + 2]
            if length <= 0xFF:
                raise FrameDecodeError("non-minimal TLV length", self.pos)
            self.pos += 3
            return length
        raise FrameDecodeError(f"unsupported TLV length form 0x{first:02X}", self.pos)

    def _read_header(self, tag: int, name: str) -> Tuple[int, int, int]:
        if self.pos >= self.end:
            raise FrameDecodeError(f"missing {name} (tag 0x{tag:02X})", self.pos)
        tag_offset = self.pos
        found = self.buf[self.pos]
        if found != tag:
            raise FrameDecodeError(f"unexpected tag 0x{found:02X} where {name} (0x{tag:02X}) was expected", tag_offset)
        self.pos += 1
        length = self._read_length()
        return tag_offset, self.pos, self.pos + length

    def open(self, tag: int, name: str) -> "_TlvReader":
        """
        Enter a constructed TLV. A truncated container is clipped to the buffer
        so the error points at the innermost TLV that runs past the end.
        """
        tag_offset, start, declared_end = self._read_header(tag, name)
        end = min(declared_end, self.end)
        self.pos = end
        return _TlvReader(self.buf, start, end, name=name, tag_offset=tag_offset, declared_end=declared_end)

    def read(self, tag: int, name: str) -> Tuple[int, int]:
        """Return (value_start, value_end) of the next primitive TLV, which must carry `tag`"""
        tag_offset, start, end = self._read_header(tag, name)
        if end > self.end:
            raise FrameDecodeError(f"truncated TLV {name}: declares {end - start} bytes, {self.end - start} remain", tag_offset)
        self.pos = end
        return start, end

    def read_fixed(self, tag: int, name: str, size: int) -> bytes:
        start, end = self.read(tag, name)
        if end - start != size:
            raise FrameDecodeError(f"{name} must be {size} bytes, got {end - start}", start)
        return self.buf[start:end]

    def read_uint(self, tag: int, name: str, size: int) -> int:
        return int.from_bytes(self.read_fixed(tag, name, size), "big")

    def read_bool(self, tag: int, name: str) -> bool:
        start = self.pos
        raw = self.read_fixed(tag, name, 1)[0]
        if raw not in (0, 1):
            raise FrameDecodeError(f"{name} boolean must be 0x00 or 0x01, got 0x{raw:02X}", start)
        return raw == 1

    def read_ascii(self, tag: int, name: str, max_len: int) -> str:
        start, end = self.read(tag, name)
        raw = self.buf[start:end]
        if not raw or len(raw) > max_len:
            raise FrameDecodeError(f"{name} length {len(raw)} outside [1, {max_len}]", start)
        try:
            return raw.decode("ascii")
        except UnicodeDecodeError:
            raise FrameDecodeError(f"{name} is not ASCII", start)

    def expect_end(self):
        if self.pos != self.end:
            raise FrameDecodeError(f"unexpected trailing data in {self.name}", self.pos)
        if self.declared_end > self.end:
            raise FrameDecodeError(
                f"truncated TLV {self.name}: declares {self.declared_end - self.tag_offset} bytes past its tag, buffer ends first",
                self.tag_offset,
            )


def _decode_header(buf: bytes, ethertype: int) -> Tuple[MacAddress, MacAddress, Optional[VlanTag], int, int]:
    """Parse the Ethernet + SV/GOOSE header; return (dst, src, vlan, appId, offset of APPID)"""
    if len(buf) < 14:
        raise FrameDecodeError("frame shorter than an Ethernet header", len(buf))
    dst = MacAddress(buf[0:6])
    src = MacAddress(buf[6:12])
    offset = 12
    vlan = None
    found = struct.unpack_from(">H", buf, offset)[0]
    if found == ETHERTYPE_VLAN:
        if len(buf) < 18:
            raise FrameDecodeError("truncated VLAN tag", offset)
        vlan = VlanTag.from_tci(struct.unpack_from(">H", buf, offset + 2)[0])
        offset += 4
        found = struct.unpack_from(">H", buf, offset)[0]
    if found != ethertype:
        raise FrameDecodeError(f"wrong ethertype 0x{found:04X}, expected 0x{ethertype:04X}", offset)
    offset += 2
    if len(buf) < offset + 8:
        raise FrameDecodeError("truncated APPID/Length/Reserved header", len(buf))
    app_id, _length, reserved1, reserved2 = struct.unpack_from(">HHHH", buf, offset)
    if reserved1 or reserved2:
        raise FrameDecodeError("reserved fields must be zero", offset + 4)
    if not dst.is_multicast:
        raise FrameDecodeError(f"destination {dst} is not multicast", 0)
    return dst, src, vlan, app_id, offset


def _check_length_field(buf: bytes, appid_offset: int):
    length = struct.unpack_from(">H", buf, appid_offset + 2)[0]
    if length != len(buf) - appid_offset:
        raise FrameDecodeError(
            f"Length field {length} does not match 8 + APDU length {len(buf) - appid_offset}", appid_offset + 2
        )


def decode_sv(buf: bytes) -> SvFrame:
    buf = bytes(buf)
    dst, src, vlan, app_id, appid_offset = _decode_header(buf, ETHERTYPE_SV)

    outer = _TlvReader(buf, appid_offset + 8, len(buf))
    pdu = outer.open(0x60, "savPdu")
    no_asdu_offset = pdu.pos
    if pdu.read_uint(0x80, "noASDU", 1) != 1:
        raise FrameDecodeError("noASDU must be 1", no_asdu_offset)
    seq = pdu.open(0xA2, "seqASDU")
    asdu = seq.open(0x30, "ASDU")

    sv_id = asdu.read_ascii(0x80, "svID", 64)
    smp_cnt_offset = asdu.pos
    smp_cnt = asdu.read_uint(0x82, "smpCnt", 2)
    if smp_cnt >= SMP_CNT_MODULO:
        raise FrameDecodeError(f"smpCnt {smp_cnt} outside [0, {SMP_CNT_MODULO - 1}]", smp_cnt_offset)
    conf_rev = asdu.read_uint(0x83, "confRev", 4)
    smp_synch = asdu.read_uint(0x85, "smpSynch", 1)
    raw = asdu.read_fixed(0x87, "samples", SV_SAMPLES_BYTES)

    for reader in (asdu, seq, pdu, outer):
        reader.expect_end()
    _check_length_field(buf, appid_offset)

    samples = tuple(struct.unpack_from(">iI", raw, index * 8) for index in range(SV_SAMPLE_COUNT))
    return SvFrame(
        dst=dst, src=src, app_id=app_id, sv_id=sv_id, smp_cnt=smp_cnt,
        conf_rev=conf_rev, smp_synch=smp_synch, samples=samples, vlan=vlan,
    )


def decode_goose(buf: bytes) -> GooseFrame:
    buf = bytes(buf)
    dst, src, vlan, app_id, appid_offset = _decode_header(buf, ETHERTYPE_GOOSE)

    outer = _TlvReader(buf, appid_offset + 8, len(buf))
    pdu = outer.open(0x61, "goosePdu")
    gocb_ref = pdu.read_ascii(0x80, "gocbRef", MAX_VISIBLE_STRING)
    tal = pdu.read_uint(0x81, "timeAllowedToLive", 4)
    dat_set = pdu.read_ascii(0x82, "datSet", MAX_VISIBLE_STRING)
    go_id = pdu.read_ascii(0x83, "goID", MAX_VISIBLE_STRING)
    raw_t = pdu.read_fixed(0x84, "t", 8)
    st_num_offset = pdu.pos
    st_num = pdu.read_uint(0x85, "stNum", 4)
    if st_num < 1:
        raise FrameDecodeError("stNum must be >= 1", st_num_offset)
    sq_num = pdu.read_uint(0x86, "sqNum", 4)
    simulation = pdu.read_bool(0x87, "simulation")
    conf_rev = pdu.read_uint(0x88, "confRev", 4)
    nds_com = pdu.read_bool(0x89, "ndsCom")
    entries_offset = pdu.pos
    num_entries = pdu.read_uint(0x8A, "numDatSetEntries", 4)
    data = pdu.open(0xAB, "allData")

    all_data: List[bool] = []
    while not data.at_end():
        all_data.append(data.read_bool(0x83, f"allData[{len(all_data)}]"))
    for reader in (data, pdu, outer):
        reader.expect_end()
    _check_length_field(buf, appid_offset)
    if not all_data:
        raise FrameDecodeError("allData is empty", data.tag_offset)
    if num_entries != len(all_data):
        raise FrameDecodeError(
            f"numDatSetEntries={num_entries} but allData carries {len(all_data)} entries", entries_offset
        )

    t = UtcTimestamp(
        seconds=int.from_bytes(raw_t[0:4], "big"),
        fraction=int.from_bytes(raw_t[4:7], "big"),
        quality=raw_t[7],
    )
    return GooseFrame(
        dst=dst, src=src, app_id=app_id, gocb_ref=gocb_ref, time_allowed_to_live=tal,
        dat_set=dat_set, go_id=go_id, t=t, st_num=st_num, sq_num=sq_num,
        all_data=tuple(all_data), simulation=simulation, conf_rev=conf_rev,
        nds_com=nds_com, vlan=vlan,
    )


def frame_ethertype(buf: bytes) -> Optional[int]:
    """Ethertype after an optional VLAN tag, or None when the frame is too short"""
    if len(buf) < 14:
        return None
    ethertype = (buf[12] << 8) | buf[13]
    if ethertype == ETHERTYPE_VLAN:
        if len(buf) < 18:
            return None
        ethertype = (buf[16] << 8) | buf[17]
    return ethertype


def frame_destination(buf: bytes) -> Optional[MacAddress]:
    if len(buf) < 6:
        return None
    return MacAddress(bytes(buf[0:6]))


def classify_frame(buf: bytes) -> FrameKind:
    ethertype = frame_ethertype(buf)
    if ethertype == ETHERTYPE_SV:
        return FrameKind.SV
    if ethertype == ETHERTYPE_GOOSE:
        return FrameKind.GOOSE
    return FrameKind.OTHER


def decode_any(buf: bytes):
    """Decode SV or GOOSE by ethertype; raise FrameDecodeError for anything else"""
    kind = classify_frame(buf)
    if kind is FrameKind.SV:
        return decode_sv(buf)
    if kind is FrameKind.GOOSE:
        return decode_goose(buf)
    raise FrameDecodeError("frame is neither SV nor GOOSE", 12)
