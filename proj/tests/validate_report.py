"""Runs the CLI and validates its JSON outputs against the shipped schemas."""

import json
import math
import pathlib
import struct
import subprocess
import sys
import tempfile

import jsonschema


def run(cli, *args):
    proc = subprocess.run([cli, *args], capture_output=True, text=True, check=False)
    if proc.returncode != 0:
        sys.exit(f"{' '.join(args)} exited {proc.returncode}: {proc.stderr}")
    return proc.stdout


def write_wav(path, samples):
    data = b"".join(struct.pack("<h", int(round(s * 32767))) for s in samples)
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    fmt = b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, 16000, 32000, 2, 16)
    path.write_bytes(header + fmt + b"data" + struct.pack("<I", len(data)) + data)


def main():
    cli, report_schema = sys.argv[1], pathlib.Path(sys.argv[2])
    summary_schema = report_schema.with_name("attack_summary_schema.json")
    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp)
        report = json.loads(run(cli, "evaluate", "--methods", "all", "--speakers", "2", "--utterances", "3",
                                "--duration", "0.5", "--iterations", "2", "--out-dir", str(out)))
        jsonschema.validate(report, json.loads(report_schema.read_text()))
        if json.loads((out / "report.json").read_text()) != report:
            sys.exit("report.json differs from stdout")

        tone = [0.2 * math.sin(2 * math.pi * 300 * i / 16000) for i in range(8000)]
        other = [0.2 * math.sin(2 * math.pi * 520 * i / 16000) for i in range(8000)]
        write_wav(out / "in.wav", tone)
        write_wav(out / "target.wav", other)
        schema = json.loads(summary_schema.read_text())
        for method in ("FGSM", "I-MEP"):
            summary = json.loads(run(cli, "attack", "--input", str(out / "in.wav"), "--target-wav",
                                     str(out / "target.wav"), "--method", method, "--iterations", "3",
                                     "--out-dir", str(out / method)))
            jsonschema.validate(summary, schema)
    print("report and attack summary match their schemas")


if __name__ == "__main__":
    main()
