"""
pcap / JSONL capture files.

Layout of a pcap file (https://wiki.wireshark.org/Development/LibpcapFileFormat):
    Global Header | Packet Header | Packet Data | Packet Header | Packet Data | ...
"""

import collections
import hashlib
import json
import struct
from typing import Iterable, Iterator, List, Tuple

from substation_testbed.exceptions import BusError

PCAP_MAGIC = 0xA1B2C3D4
LINKTYPE_ETHERNET = 1
SNAPLEN = 65535

GblHdr = collections.namedtuple("GblHdr", ["magic_number", "version_major", "version_minor", "thiszone", "sigflags", "snaplen", "network"])
PktHdr = collections.namedtuple("PktHdr", ["ts_sec", "ts_usec", "incl_len", "orig_len"])
kGblHdrFmt = "<IHHiIII"
kGblHdrSiz = struct.calcsize(kGblHdrFmt)
kPktHdrFmt = "<IIII"
kPktHdrSiz = struct.calcsize(kPktHdrFmt)

PcapPacket = collections.namedtuple("PcapPacket", ["timestamp_ns", "frame_bytes"])


def pcap_bytes(records: Iterable, epoch_seconds: int = 0) -> bytes:
    """
    Capture records as a microsecond pcap; timestamps are epoch + deliverAt
    """
    chunks = [struct.pack(kGblHdrFmt, PCAP_MAGIC, 2, 4, 0, 0, SNAPLEN, LINKTYPE_ETHERNET)]
    for record in records:
        sec, nsec = divmod(record.deliver_at, 1_000_000_000)
        data = record.frame_bytes
        chunks.append(struct.pack(kPktHdrFmt, epoch_seconds + sec, nsec // 1000, len(data), len(data)))
        chunks.append(data)
    return b"".join(chunks)


def write_pcap(path: str, records: Iterable, epoch_seconds: int = 0):
    try:
        with open(path, "wb") as fp:
            fp.write(pcap_bytes(records, epoch_seconds))
    except OSError as e:
        raise BusError(f"Cannot write pcap {path}: {e}") from e


def read_pcap(path: str) -> List[PcapPacket]:
    with open(path, "rb") as fp:
        data = fp.read(kGblHdrSiz)
        if len(data) != kGblHdrSiz:
            raise BusError("Unable to read pcap global header")
        header = GblHdr(*struct.unpack(kGblHdrFmt, data))
        if header.magic_number != PCAP_MAGIC or header.version_major != 2 or header.version_minor != 4:
            raise BusError(f"Not a little-endian microsecond pcap (magic 0x{header.magic_number:08X})")
        if header.network != LINKTYPE_ETHERNET:
            raise BusError(f"Unsupported pcap link type {header.network}")

        packets = []
        while True:
            data = fp.read(kPktHdrSiz)
            if data == b"":
                return packets
            if len(data) != kPktHdrSiz:
                raise BusError("Unable to read pcap record header")
            hdr = PktHdr(*struct.unpack(kPktHdrFmt, data))
            pkt = fp.read(hdr.incl_len)
            if len(pkt) != hdr.incl_len:
                raise BusError("Unable to read pcap packet data")
            packets.append(PcapPacket(hdr.ts_sec * 1_000_000_000 + hdr.ts_usec * 1000, pkt))


def write_capture_jsonl(path: str, records: Iterable):
    try:
        with open(path, "w", encoding="utf-8") as fp:
            for record in records:
                fp.write(json.dumps({
                    "publishAt": record.publish_at,
                    "deliverAt": record.deliver_at,
                    "publisher": record.publisher,
                    "frame": record.frame_bytes.hex(),
                }, sort_keys=True) + "\n")
    except OSError as e:
        raise BusError(f"Cannot write capture {path}: {e}") from e


def iter_capture_jsonl(path: str) -> Iterator[Tuple[int, int, str, bytes]]:
    with open(path, "r", encoding="utf-8") as fp:
        for line in fp:
            if not line.strip():
                continue
            item = json.loads(line)
            yield item["publishAt"], item["deliverAt"], item["publisher"], bytes.fromhex(item["frame"])


def capture_digest(path: str) -> str:
    with open(path, "rb") as fp:
        return hashlib.sha256(fp.read()).hexdigest()
