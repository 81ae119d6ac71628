# Copyright (c) 2025, Hopnet Communications LLP and contributors
# For license information, please see license.txt

"""
Frame dump for captures: pcap, JSONL capture, or hex strings.
A frame that does not decode is listed with its error; the dump carries on.
"""

import os
from typing import Any, Dict, Iterable, List, Optional, Tuple

from substation_testbed.exceptions import BusError, FrameDecodeError, TestbedError, ValidationError, throw
from substation_testbed.testbed.frame_codec.frame_codec import FrameKind, GooseFrame, SvFrame, classify_frame, decode_any
from substation_testbed.testbed.process_bus.capture import iter_capture_jsonl, read_pcap


def frame_fields(frame) -> Dict[str, Any]:
    if isinstance(frame, SvFrame):
        return {
            "dst": str(frame.dst),
            "src": str(frame.src),
            "appId": f"0x{frame.app_id:04X}",
            "svId": frame.sv_id,
            "smpCnt": frame.smp_cnt,
            "confRev": frame.conf_rev,
            "smpSynch": frame.smp_synch,
            "samples": [value for value, _ in frame.samples],
        }
    if isinstance(frame, GooseFrame):
        return {
            "dst": str(frame.dst),
            "src": str(frame.src),
            "appId": f"0x{frame.app_id:04X}",
            "goId": frame.go_id,
            "gocbRef": frame.gocb_ref,
            "datSet": frame.dat_set,
            "t": f"{frame.t.seconds}.{(frame.t.fraction * 1_000_000) >> 24:06d}",
            "stNum": frame.st_num,
            "sqNum": frame.sq_num,
            "timeAllowedToLive": frame.time_allowed_to_live,
            "confRev": frame.conf_rev,
            "simulation": frame.simulation,
            "allData": list(frame.all_data),
        }
    return {}


def decode_frame(index: int, frame_bytes: bytes, received_at: Optional[int] = None, publisher: Optional[str] = None) -> Dict[str, Any]:
    entry: Dict[str, Any] = {"index": index, "receivedAtNs": received_at, "length": len(frame_bytes)}
    if publisher is not None:
        entry["publisher"] = publisher
    kind = classify_frame(frame_bytes)
    entry["kind"] = kind.value
    if kind is FrameKind.OTHER:
        entry["error"] = "not an SV or GOOSE frame"
        return entry
    try:
        entry["fields"] = frame_fields(decode_any(frame_bytes))
    except FrameDecodeError as e:
        entry["error"] = e.message
    return entry


def _parse_hex(text: str) -> List[bytes]:
    frames = []
    for index, chunk in enumerate(text.replace(",", " ").split()):
        try:
            frames.append(bytes.fromhex(chunk))
        except ValueError:
            throw(f"frame {index} is not a hex string", key_path="input")
    return frames


def load_frames(source: str) -> Iterable[Tuple[Optional[int], Optional[str], bytes]]:
    """(receivedAt, publisher, frame) per frame of a pcap, JSONL capture or hex input"""
    if os.path.exists(source):
        if source.endswith(".jsonl"):
            try:
                return [(deliver_at, publisher, frame) for _publish_at, deliver_at, publisher, frame in iter_capture_jsonl(source)]
            except (ValueError, KeyError) as e:
                raise ValidationError(f"not a JSONL capture: {e}", key_path="input") from e
        try:
            return [(packet.timestamp_ns, None, packet.frame_bytes) for packet in read_pcap(source)]
        except OSError as e:
            raise TestbedError(f"Cannot read {source}: {e}", title="Decode") from e
        except BusError as e:
            raise ValidationError(e.message, key_path="input") from e
    return [(None, None, frame) for frame in _parse_hex(source)]


def decode(source: str) -> List[Dict[str, Any]]:
    """Per-frame field listing of a capture file or hex string(s)"""
    return [decode_frame(index, frame, at, publisher) for index, (at, publisher, frame) in enumerate(load_frames(source))]


def render_line(entry: Dict[str, Any]) -> str:
    """One line summary, e.g. for a terminal table or a log"""
    at = "-" if entry["receivedAtNs"] is None else str(entry["receivedAtNs"])
    if "error" in entry:
        return f"#{entry['index']} {at} {entry['kind']} ERROR {entry['error']}"
    fields = entry["fields"]
    if entry["kind"] == FrameKind.SV.value:
        detail = f"svId={fields['svId']} smpCnt={fields['smpCnt']} Ia={fields['samples'][0]}"
    else:
        detail = f"goId={fields['goId']} stNum={fields['stNum']} sqNum={fields['sqNum']} t={fields['t']} allData={fields['allData']}"
    return f"#{entry['index']} {at} {entry['kind']} {detail}"
