import json
import socket

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dravbias.cot_prompting import build_base_prompt, render
from dravbias.errors import AuthMissing, BackendError, ConfigError, FixtureMiss, RateLimited, Timeout
from dravbias.mt_client import (
    BackendConfig,
    FixtureStore,
    LiveBackend,
    RateLimiter,
    RecordBackend,
    ReplayBackend,
    backoff_delays,
    exchange_key,
    load_config,
    make_backend,
)
from dravbias.script_core import TELUGU

ENDPOINT = "https://mt.example/v1/chat/completions"


def ok(text):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


def live(handler, monkeypatch, **overrides):
    monkeypatch.setenv("MT_TOKEN", "secret")
    cfg = BackendConfig(kind="live", endpoint=ENDPOINT, auth_env="MT_TOKEN",
                        backoff_base=0.5, backoff_cap=2.0, rate_limit_rpm=6000, **overrides)
    sleeps = []
    backend = LiveBackend(cfg, client=httpx.Client(transport=httpx.MockTransport(handler)),
                          sleep=sleeps.append,
                          rate_limiter=RateLimiter(cfg.rate_limit_rpm, sleep=lambda d: None))
    return backend, sleeps


def plan(sentence="Doctor is in the hospital"):
    return build_base_prompt(sentence, TELUGU)


class TestLive:
    def test_request_shape(self, monkeypatch):
        seen = []

        def handler(request):
            seen.append((request.headers["authorization"], json.loads(request.content)))
            return ok(" vaidyuḍu unnāḍu \n")

        backend, _ = live(handler, monkeypatch)
        assert backend.translate(plan()) == "vaidyuḍu unnāḍu"
        auth, body = seen[0]
        assert auth == "Bearer secret"
        assert body["temperature"] == 0
        assert body["messages"] == [{"role": "user", "content": plan().text}]

    def test_retries_then_succeeds(self, monkeypatch):
        codes = iter([429, 503])

        def handler(request):
            code = next(codes, 200)
            return ok("x") if code == 200 else httpx.Response(code)

        backend, sleeps = live(handler, monkeypatch)
        assert backend.translate(plan()) == "x"
        assert backend.calls == 3
        assert sleeps[:2] == [0.5, 1.0]

    def test_rate_limited_after_retries(self, monkeypatch):
        backend, _ = live(lambda r: httpx.Response(429), monkeypatch, max_retries=2)
        with pytest.raises(RateLimited):
            backend.translate(plan())
        assert backend.calls == 3

    def test_timeout(self, monkeypatch):
        def handler(request):
            raise httpx.ReadTimeout("slow", request=request)

        backend, _ = live(handler, monkeypatch, max_retries=1)
        with pytest.raises(Timeout):
            backend.translate(plan())
        assert backend.calls == 2

    def test_client_error_not_retried(self, monkeypatch):
        backend, _ = live(lambda r: httpx.Response(400, text="bad"), monkeypatch)
        with pytest.raises(BackendError, match="400"):
            backend.translate(plan())
        assert backend.calls == 1

    def test_bad_payload(self, monkeypatch):
        backend, _ = live(lambda r: httpx.Response(200, json={"nope": 1}), monkeypatch)
        with pytest.raises(BackendError):
            backend.translate(plan())

    def test_auth_missing(self, monkeypatch):
        backend, _ = live(lambda r: ok("x"), monkeypatch)
        monkeypatch.delenv("MT_TOKEN")
        with pytest.raises(AuthMissing):
            backend.translate(plan())
        assert backend.calls == 0


@given(st.integers(0, 12), st.floats(0.01, 5), st.floats(0.01, 60))
def test_backoff_monotone_and_capped(n, base, cap):
    delays = backoff_delays(n, base, cap)
    assert len(delays) == n
    assert all(a <= b for a, b in zip(delays, delays[1:]))
    assert all(d <= cap for d in delays)


def test_rate_limiter_spacing():
    now = [0.0]
    slept = []

    def sleep(d):
        slept.append(d)
        now[0] += d

    limiter = RateLimiter(60, clock=lambda: now[0], sleep=sleep)
    for _ in range(3):
        limiter.acquire()
    assert slept == [1.0, 1.0]
    now[0] += 5
    limiter.acquire()
    assert slept == [1.0, 1.0]


def test_exchange_key_depends_on_prompt():
    assert exchange_key("a", 0, "x") != exchange_key("a", 0, "y")
    assert exchange_key("a", 0, "x") == exchange_key("a", 0, "x")


@pytest.fixture
def no_network(monkeypatch):
    def refuse(*args, **kwargs):
        raise AssertionError("network access attempted")

    monkeypatch.setattr(socket, "socket", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse)


def record(tmp_path, monkeypatch, sentences, overwrite=False, reply=lambda s: s.upper()):
    fixture = tmp_path / "fx.jsonl"

    def handler(request):
        prompt = json.loads(request.content)["messages"][0]["content"]
        return ok(reply(prompt.rsplit(": ", 1)[-1]))

    live_backend, _ = live(handler, monkeypatch)
    cfg = BackendConfig(kind="record", endpoint=ENDPOINT, auth_env="MT_TOKEN",
                        fixture_path=str(fixture), overwrite=overwrite)
    backend = RecordBackend(cfg, live=live_backend)
    out = [backend.translate(plan(s), f"p{i}") for i, s in enumerate(sentences)]
    return fixture, out, live_backend


class TestRecordReplay:
    SENTENCES = ["Doctor is in the hospital", "The caregiver cooked", "Rivers are flowing",
                 "ಕನ್ನಡ ತಿಳಿದಿದೆ", "The teacher came"]

    def test_round_trip_byte_identical(self, tmp_path, monkeypatch, no_network):
        fixture, recorded, _ = record(tmp_path, monkeypatch, self.SENTENCES)
        assert len(fixture.read_text(encoding="utf-8").splitlines()) == len(self.SENTENCES)
        replay = make_backend(BackendConfig(kind="replay", fixture_path=str(fixture)))
        replayed = [replay.translate(plan(s), f"p{i}") for i, s in enumerate(self.SENTENCES)]
        assert [r.encode("utf-8") for r in replayed] == [r.encode("utf-8") for r in recorded]

    def test_miss_names_pair(self, tmp_path, monkeypatch):
        fixture, _, _ = record(tmp_path, monkeypatch, self.SENTENCES[:1])
        replay = ReplayBackend(BackendConfig(kind="replay", fixture_path=str(fixture)))
        with pytest.raises(FixtureMiss) as info:
            replay.translate(plan("Something else"), "p9")
        assert info.value.pair_id == "p9"

    def test_record_reuses_existing(self, tmp_path, monkeypatch):
        fixture, _, live_backend = record(tmp_path, monkeypatch, self.SENTENCES[:1])
        cfg = BackendConfig(kind="record", endpoint=ENDPOINT, auth_env="MT_TOKEN",
                            fixture_path=str(fixture))
        again = RecordBackend(cfg, live=live_backend)
        again.translate(plan(self.SENTENCES[0]), "p0")
        assert live_backend.calls == 1
        assert len(fixture.read_text(encoding="utf-8").splitlines()) == 1

    def test_overwrite_appends_and_last_wins(self, tmp_path, monkeypatch):
        fixture, _, _ = record(tmp_path, monkeypatch, self.SENTENCES[:1])
        _, _, live_backend = record(tmp_path, monkeypatch, [], overwrite=True)
        cfg = BackendConfig(kind="record", endpoint=ENDPOINT, auth_env="MT_TOKEN",
                            fixture_path=str(fixture), overwrite=True)
        live_backend._client = httpx.Client(transport=httpx.MockTransport(lambda r: ok("fresh")))
        RecordBackend(cfg, live=live_backend).translate(plan(self.SENTENCES[0]), "p0")
        assert len(fixture.read_text(encoding="utf-8").splitlines()) == 2
        replay = ReplayBackend(BackendConfig(kind="replay", fixture_path=str(fixture)))
        assert replay.translate(plan(self.SENTENCES[0]), "p0") == "fresh"

    def test_level_is_part_of_key(self, tmp_path, monkeypatch):
        fixture, _, _ = record(tmp_path, monkeypatch, self.SENTENCES[:1])
        store = FixtureStore(fixture)
        p1 = render(TELUGU, 1, {"sentence": "x", "suffix": "ḍu", "marking": "masculine",
                                "language": "Telugu"})
        assert store.get(exchange_key("p0", p1.level, p1.text)) is None
        assert len(store) == 1

    def test_bad_fixture_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"key": {}}\n', encoding="utf-8")
        with pytest.raises(BackendError, match="bad.jsonl:1"):
            FixtureStore(path)


class TestConfig:
    def test_load(self, tmp_path):
        (tmp_path / "fx.jsonl").write_text("", encoding="utf-8")
        path = tmp_path / "mt.ini"
        path.write_text("[backend]\nkind = replay\nfixture_path = fx.jsonl\nmax_retries = 5\n"
                        "overwrite = yes\n", encoding="utf-8")
        cfg = load_config(path)
        assert cfg.fixture_path == str(tmp_path / "fx.jsonl")
        assert (cfg.max_retries, cfg.overwrite) == (5, True)
        assert load_config(path, model="m2").model == "m2"
        cfg.validate()

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "mt.ini"
        path.write_text("[backend]\napi_key = oops\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="api_key"):
            load_config(path)

    def test_missing_section(self, tmp_path):
        path = tmp_path / "mt.ini"
        path.write_text("[other]\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)

    @pytest.mark.parametrize("cfg", [
        BackendConfig(kind="psychic"),
        BackendConfig(kind="live", endpoint=None),
        BackendConfig(kind="replay", fixture_path="/nonexistent.jsonl"),
        BackendConfig(kind="record", endpoint=ENDPOINT, fixture_path=None),
        BackendConfig(kind="live", endpoint=ENDPOINT, max_retries=-1),
    ])
    def test_validate(self, cfg):
        with pytest.raises(ConfigError):
            cfg.validate()
