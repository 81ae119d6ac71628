import traceback
from typing import Any, Dict, List, Optional, Sequence, Tuple

from substation_testbed.config import ATTACKER_INTER_PACKET_NS, NS_PER_MS, SMP_CNT_MODULO
from substation_testbed.exceptions import TestbedError, throw
from substation_testbed.logger import info_print, log_error
from substation_testbed.testbed.attacker.attacker import (
    GooseSpoof,
    SvFdi,
    craft_goose_spoof,
    craft_sv_fdi,
    frame_to_replay,
    learn_streams,
    require_profile,
)
from substation_testbed.testbed.frame_codec.frame_codec import FrameKind, UtcTimestamp
from substation_testbed.testbed.process_bus.capture import read_pcap, write_pcap
from substation_testbed.testbed.process_bus.process_bus import CaptureRecord

# Offline attacks work on a recorded capture; crafted frames are written as a pcap
# (path ending in .pcap) or as one hex frame per line.


def _read_capture(pcap_path: str) -> List[Tuple[int, bytes]]:
    try:
        return [(packet.timestamp_ns, packet.frame_bytes) for packet in read_pcap(pcap_path)]
    except OSError as e:
        raise TestbedError(f"Cannot read {pcap_path}: {e}", title="Attack") from e


def _write_frames(frames: Sequence[Tuple[int, bytes]], out: Optional[str]) -> Optional[str]:
    if out is None:
        return None
    try:
        if out.endswith(".pcap"):
            write_pcap(out, [CaptureRecord(t, t, frame, "attacker") for t, frame in frames])
        else:
            with open(out, "w", encoding="utf-8") as handle:
                for _, frame in frames:
                    handle.write(frame.hex() + "\n")
    except OSError as e:
        raise TestbedError(f"Cannot write {out}: {e}", title="Attack") from e
    info_print(f"{len(frames)} crafted frames written to {out}")
    return out


def _failure(title: str, e: Exception, context: Dict[str, Any]) -> Dict[str, Any]:
    if isinstance(e, TestbedError):
        log_error(title=title, message={**context, "error": e.message})
        return {"success": False, "status": "error", "message": e.message, "code": e.code}
    log_error(title=title, message={**context, "error": str(e), "traceback": traceback.format_exc()})
    return {"success": False, "status": "error", "message": f"{title}: {str(e)}", "code": "INTERNAL_ERROR"}


def attack_learn(pcap_path: str) -> Dict[str, Any]:
    """Stream profiles (addressing, counters) of every SV / GOOSE stream in a capture"""
    try:
        result = learn_streams(_read_capture(pcap_path))
        return {
            "success": True,
            "status": "success",
            "message": f"{len(result.profiles)} streams learned, {result.skipped} frames skipped",
            "code": "STREAMS_LEARNED",
            "data": {
                "profiles": {stream_id: profile.as_dict() for stream_id, profile in sorted(result.profiles.items())},
                "skipped": result.skipped,
            },
        }
    except Exception as e:
        return _failure("Attack Learn - Error", e, {"pcap": pcap_path})


def attack_replay(pcap_path: str, index: int, out: Optional[str] = None) -> Dict[str, Any]:
    """Pick the index-th packet of a capture as the frame to replay, unchanged"""
    try:
        capture = _read_capture(pcap_path)
        if not 0 <= index < len(capture):
            throw(f"capture has {len(capture)} packets", key_path="index")
        t, frame_bytes = capture[index]
        frame = frame_to_replay(frame_bytes, key_path="index")
        return {
            "success": True,
            "status": "success",
            "message": f"Frame {index} ({frame.go_id} stNum {frame.st_num} sqNum {frame.sq_num}) ready for replay",
            "code": "REPLAY_CRAFTED",
            "data": {
                "hex": frame_bytes.hex(),
                "goId": frame.go_id,
                "stNum": frame.st_num,
                "sqNum": frame.sq_num,
                "allData": list(frame.all_data),
                "out": _write_frames([(t, frame_bytes)], out),
            },
        }
    except Exception as e:
        return _failure("Attack Replay - Error", e, {"pcap": pcap_path, "index": index})


def attack_spoof(pcap_path: str, target_stream: str, all_data: Sequence[bool] = (True,), conformant: bool = True, out: Optional[str] = None) -> Dict[str, Any]:
    """
    Craft one GOOSE frame for a learned stream. The conformant frame carries
    stNum + 1, sqNum 0 and t one millisecond after the last captured packet.
    """
    try:
        capture = _read_capture(pcap_path)
        attack = GooseSpoof("spoof", target_stream, all_data=tuple(all_data), conformant=conformant)
        attack.validate()
        profile = require_profile(learn_streams(capture).profiles, target_stream, FrameKind.GOOSE)
        at = (capture[-1][0] if capture else 0) + NS_PER_MS
        frame_bytes = craft_goose_spoof(profile, attack, UtcTimestamp.from_sim_time(0, at))
        return {
            "success": True,
            "status": "success",
            "message": f"Spoofed {target_stream} frame crafted",
            "code": "SPOOF_CRAFTED",
            "data": {"hex": frame_bytes.hex(), "out": _write_frames([(at, frame_bytes)], out)},
        }
    except Exception as e:
        return _failure("Attack Spoof - Error", e, {"pcap": pcap_path, "target": target_stream})


def attack_fdi(pcap_path: str, target_stream: str, injected_peak_a: float = 20_000.0, duration_ns: int = 20 * NS_PER_MS, out: Optional[str] = None) -> Dict[str, Any]:
    """Craft an SV injection run continuing the learned smpCnt of the target stream"""
    try:
        capture = _read_capture(pcap_path)
        profile = require_profile(learn_streams(capture).profiles, target_stream, FrameKind.SV)
        attack = SvFdi("fdi", target_stream, injected_peak_a=injected_peak_a, start_at_ns=(profile.last_seen_at or 0) + ATTACKER_INTER_PACKET_NS, duration_ns=duration_ns)
        attack.validate()
        frames = craft_sv_fdi(profile, attack)
        return {
            "success": True,
            "status": "success",
            "message": f"{len(frames)} injected SV frames crafted for {target_stream}",
            "code": "FDI_CRAFTED",
            "data": {"frames": len(frames), "firstSmpCnt": (profile.last_smp_cnt + 1) % SMP_CNT_MODULO, "out": _write_frames(frames, out)},
        }
    except Exception as e:
        return _failure("Attack FDI - Error", e, {"pcap": pcap_path, "target": target_stream})
