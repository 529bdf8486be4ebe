"""Replay a timestamped steering script through a headless session.

The script sets the navigation command at t = 0, pauses the session at
t = 0.05 s, and resumes at t = 0.08 s. The transcript of state
messages prints to stdout; running the demo twice produces the same
bytes.
"""

import pathlib
import tempfile

from capnav.cli import main as capnav_main

SCRIPT = (
    '{"kind": "command", "t": 0.0, "field_magnitude_t": 0.03,'
    ' "field_direction": [1, 0, 0], "gradient_tpm": [0, 0.45, 0]}\n'
    '{"kind": "advance_mode", "t": 0.05, "mode": "paused"}\n'
    '{"kind": "advance_mode", "t": 0.08, "mode": "running"}\n'
)


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        script = pathlib.Path(tmp) / "steer.jsonl"
        script.write_text(SCRIPT)
        code = capnav_main(
            [
                "serve",
                "--script",
                str(script),
                "--until",
                "3.0",
                "--set",
                "session.time_dilation=1",
            ]
        )
    raise SystemExit(code)


if __name__ == "__main__":
    main()
