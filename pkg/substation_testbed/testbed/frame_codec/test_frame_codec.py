# Copyright (c) 2025, Hopnet Communications LLP and Contributors
# See license.txt

import random
import string
import time

import pytest

from substation_testbed.exceptions import FrameDecodeError, FrameEncodeError
from substation_testbed.testbed.frame_codec.frame_codec import (
    FrameKind,
    GooseFrame,
    MacAddress,
    SvFrame,
    UtcTimestamp,
    VlanTag,
    classify_frame,
    decode_goose,
    decode_sv,
    encode_goose,
    encode_sv,
)

SV_DST = MacAddress.parse("01:0C:CD:04:00:03")
GOOSE_DST = MacAddress.parse("01:0C:CD:01:00:01")
SRC = MacAddress.parse("00:1A:2B:3C:4D:01")


def make_sv(**overrides) -> SvFrame:
    fields = dict(
        dst=SV_DST, src=SRC, app_id=0x4000, sv_id="MU01", smp_cnt=0,
        conf_rev=1, smp_synch=2, samples=[(0, 0)] * 8,
    )
    fields.update(overrides)
    return SvFrame(**fields)


def make_goose(**overrides) -> GooseFrame:
    fields = dict(
        dst=GOOSE_DST, src=SRC, app_id=0x0001, gocb_ref="PC1LD0/LLN0$GO$gcbTrip",
        time_allowed_to_live=2000, dat_set="PC1LD0/LLN0$dsTrip", go_id="PC1_TRIP",
        t=UtcTimestamp(1_704_067_200, 0, 0), st_num=1, sq_num=0, all_data=[False],
    )
    fields.update(overrides)
    return GooseFrame(**fields)


def random_ascii(rng: random.Random, low: int, high: int) -> str:
    return "".join(rng.choice(string.ascii_letters + string.digits + "/$_") for _ in range(rng.randint(low, high)))


def random_vlan(rng: random.Random):
    if rng.random() < 0.5:
        return None
    return VlanTag(vid=rng.randint(0, 4095), priority=rng.randint(0, 7), dei=rng.randint(0, 1))


def random_mac(rng: random.Random, multicast: bool) -> MacAddress:
    octets = bytearray(rng.getrandbits(8) for _ in range(6))
    if multicast:
        octets[0] |= 0x01
    return MacAddress(bytes(octets))


def random_sv(rng: random.Random) -> SvFrame:
    return SvFrame(
        dst=random_mac(rng, True), src=random_mac(rng, False), app_id=rng.randint(0, 0xFFFF),
        sv_id=random_ascii(rng, 1, 64), smp_cnt=rng.randint(0, 4799),
        conf_rev=rng.getrandbits(32), smp_synch=rng.getrandbits(8),
        samples=[(rng.randint(-(2**31), 2**31 - 1), rng.getrandbits(32)) for _ in range(8)],
        vlan=random_vlan(rng),
    )


def random_goose(rng: random.Random, max_entries: int = 80) -> GooseFrame:
    return GooseFrame(
        dst=random_mac(rng, True), src=random_mac(rng, False), app_id=rng.randint(0, 0xFFFF),
        gocb_ref=random_ascii(rng, 1, 129), time_allowed_to_live=rng.getrandbits(32),
        dat_set=random_ascii(rng, 1, 129), go_id=random_ascii(rng, 1, 129),
        t=UtcTimestamp(rng.getrandbits(32), rng.getrandbits(24), rng.getrandbits(8)),
        st_num=rng.randint(1, 2**32 - 1), sq_num=rng.getrandbits(32),
        all_data=[rng.random() < 0.5 for _ in range(rng.randint(1, max_entries))],
        simulation=rng.random() < 0.5, conf_rev=rng.getrandbits(32), nds_com=rng.random() < 0.5,
        vlan=random_vlan(rng),
    )


class TestSvCodec:
    def test_minimal_frame_round_trips(self):
        frame = make_sv()
        encoded = encode_sv(frame)
        assert encoded[12:14] == b"\x88\xba"
        assert decode_sv(encoded) == frame

    def test_destination_is_first_six_bytes(self):
        encoded = encode_sv(make_sv())
        assert encoded[:6] == bytes([0x01, 0x0C, 0xCD, 0x04, 0x00, 0x03])

    def test_length_field_is_eight_plus_apdu(self):
        encoded = encode_sv(make_sv())
        length = int.from_bytes(encoded[16:18], "big")
        assert length == len(encoded) - 14
        assert length == 8 + len(encoded[22:])

    def test_smp_cnt_4800_rejected(self):
        with pytest.raises(FrameEncodeError) as error:
            encode_sv(make_sv(smp_cnt=4800))
        assert error.value.field == "smpCnt"

    def test_wrong_sample_count_rejected(self):
        with pytest.raises(FrameEncodeError) as error:
            encode_sv(make_sv(samples=[(0, 0)] * 7))
        assert error.value.field == "samples"

    def test_unicast_destination_rejected(self):
        with pytest.raises(FrameEncodeError) as error:
            encode_sv(make_sv(dst=MacAddress.parse("00:0C:CD:04:00:03")))
        assert error.value.field == "dst"

    def test_truncated_frame_reports_final_tlv(self):
        encoded = encode_sv(make_sv())
        samples_tag_offset = len(encoded) - 64 - 2
        with pytest.raises(FrameDecodeError) as error:
            decode_sv(encoded[:-1])
        assert error.value.offset == samples_tag_offset
        assert "samples" in str(error.value)

    def test_wrong_ethertype_rejected(self):
        encoded = bytearray(encode_sv(make_sv()))
        encoded[12:14] = b"\x88\xb8"
        with pytest.raises(FrameDecodeError) as error:
            decode_sv(bytes(encoded))
        assert error.value.offset == 12

    def test_length_field_mismatch_rejected(self):
        encoded = bytearray(encode_sv(make_sv()))
        encoded[17] += 1
        with pytest.raises(FrameDecodeError) as error:
            decode_sv(bytes(encoded))
        assert error.value.offset == 16

    def test_samples_field_must_be_64_bytes(self):
        encoded = encode_sv(make_sv())
        samples_length_index = len(encoded) - 65
        body = bytearray(encoded[:-8])
        body[samples_length_index] = 56
        # Length field, savPdu, seqASDU and ASDU lengths all shrink by 8
        for index in (17, 23, 28, 30):
            body[index] -= 8
        with pytest.raises(FrameDecodeError) as error:
            decode_sv(bytes(body))
        assert "samples must be 64 bytes" in str(error.value)

    def test_vlan_tag_preserved(self):
        frame = make_sv(vlan=VlanTag(vid=5, priority=4))
        encoded = encode_sv(frame)
        assert encoded[12:14] == b"\x81\x00"
        assert decode_sv(encoded).vlan == VlanTag(vid=5, priority=4)

    def test_encoding_is_deterministic(self):
        frame = make_sv(smp_cnt=17, samples=[(i * 1000, 0) for i in range(8)])
        assert encode_sv(frame) == encode_sv(frame)

    def test_random_corpus_round_trips(self):
        rng = random.Random(61850)
        for _ in range(1000):
            frame = random_sv(rng)
            encoded = encode_sv(frame)
            decoded = decode_sv(encoded)
            assert decoded == frame
            assert encode_sv(decoded) == encoded


class TestGooseCodec:
    def test_minimal_frame_round_trips(self):
        frame = make_goose()
        encoded = encode_goose(frame)
        assert encoded[12:14] == b"\x88\xb8"
        assert decode_goose(encoded) == frame

    def test_trip_entry_layout(self):
        encoded = encode_goose(make_goose(all_data=[True]))
        assert encoded.endswith(b"\xab\x03\x83\x01\x01")

    def test_st_num_zero_rejected(self):
        with pytest.raises(FrameEncodeError) as error:
            encode_goose(make_goose(st_num=0))
        assert error.value.field == "stNum"

    def test_empty_all_data_rejected(self):
        with pytest.raises(FrameEncodeError):
            encode_goose(make_goose(all_data=[]))

    def test_entry_count_mismatch_rejected(self):
        encoded = encode_goose(make_goose(all_data=[True]))
        marker = b"\x8a\x04\x00\x00\x00\x01"
        index = encoded.index(marker)
        tampered = encoded[:index] + b"\x8a\x04\x00\x00\x00\x02" + encoded[index + len(marker):]
        with pytest.raises(FrameDecodeError) as error:
            decode_goose(tampered)
        assert error.value.offset == index
        assert "numDatSetEntries" in str(error.value)

    def test_non_canonical_boolean_rejected(self):
        encoded = bytearray(encode_goose(make_goose(all_data=[True])))
        encoded[-1] = 0xFF
        with pytest.raises(FrameDecodeError):
            decode_goose(bytes(encoded))

    def test_unknown_tag_rejected(self):
        encoded = bytearray(encode_goose(make_goose()))
        index = encoded.index(b"\x87\x01\x00")
        encoded[index] = 0x9F
        with pytest.raises(FrameDecodeError) as error:
            decode_goose(bytes(encoded))
        assert error.value.offset == index

    def test_long_strings_use_extended_length(self):
        frame = make_goose(gocb_ref="G" * 129, dat_set="D" * 129, go_id="I" * 129, all_data=[True] * 80)
        encoded = encode_goose(frame)
        assert b"\x80\x81\x81" in encoded
        assert decode_goose(encoded) == frame

    def test_timestamp_from_sim_time(self):
        stamp = UtcTimestamp.from_sim_time(1_704_067_200, 1_500_000_000)
        assert stamp.seconds == 1_704_067_201
        assert stamp.fraction == 1 << 23

    def test_random_corpus_round_trips(self):
        rng = random.Random(8_1)
        for _ in range(1000):
            frame = random_goose(rng)
            encoded = encode_goose(frame)
            decoded = decode_goose(encoded)
            assert decoded == frame
            assert encode_goose(decoded) == encoded


class TestClassifyAndTotality:
    def test_classify(self):
        assert classify_frame(encode_sv(make_sv())) is FrameKind.SV
        assert classify_frame(encode_goose(make_goose())) is FrameKind.GOOSE
        ipv4 = bytes(12) + b"\x08\x00" + bytes(20)
        assert classify_frame(ipv4) is FrameKind.OTHER

    def test_classify_behind_vlan(self):
        encoded = encode_goose(make_goose(vlan=VlanTag(vid=1)))
        assert classify_frame(encoded) is FrameKind.GOOSE

    def test_classify_never_errors(self):
        for junk in (b"", b"\x01", bytes(13), b"\x00" * 12 + b"\x81\x00"):
            assert classify_frame(junk) is FrameKind.OTHER

    def test_decoders_only_raise_typed_errors(self):
        rng = random.Random(7)
        valid = [encode_sv(random_sv(rng)) for _ in range(20)] + [encode_goose(random_goose(rng)) for _ in range(20)]
        for _ in range(2000):
            buf = bytearray(rng.choice(valid))
            for _ in range(rng.randint(1, 4)):
                action = rng.random()
                if action < 0.4 and buf:
                    buf[rng.randrange(len(buf))] = rng.getrandbits(8)
                elif action < 0.7 and buf:
                    del buf[rng.randrange(len(buf)):]
                else:
                    buf.insert(rng.randrange(len(buf) + 1), rng.getrandbits(8))
            for decoder in (decode_sv, decode_goose):
                try:
                    decoder(bytes(buf))
                except FrameDecodeError:
                    pass


class TestAcceptanceCorpus:
    def test_ten_thousand_frames_each_under_five_seconds(self):
        rng = random.Random(2025)
        corpus = [(random_sv(rng), random_goose(rng, max_entries=8)) for _ in range(10_000)]
        started = time.perf_counter()
        for sv, goose in corpus:
            sv_bytes = encode_sv(sv)
            assert decode_sv(sv_bytes) == sv
            assert encode_sv(decode_sv(sv_bytes)) == sv_bytes
            goose_bytes = encode_goose(goose)
            assert decode_goose(goose_bytes) == goose
            assert encode_goose(decode_goose(goose_bytes)) == goose_bytes
        assert time.perf_counter() - started < 5.0
