"""End-to-end integration with the watermarking pipeline.

The adapter package talks to the pipeline only through files and CLIs, and
that is exactly how this module exercises it: every pipeline step below is
a subprocess call to ``peccavi``; adapter output is produced by the
``peccavi-adapters`` CLI.  The one place the pipeline package is imported
is the parse check, which feeds adapter-emitted files to the pipeline's
own loaders to pin the interchange contract.

Criterion exercised here: saliency maps and paraphrase manifests from the
adapters drive calibrate -> embed -> external-paraphrase attack -> detect
on three sample images, and the mean detection probability after s=0.1
paraphrasing stays at or above 0.6.
"""

import json
import re
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from .conftest import textured_rgb, write_clean_corpus, write_png

PECCAVI = [sys.executable, "-m", "peccavi.cli"]
ADAPTERS = [sys.executable, "-m", "peccavi_adapters.cli"]

N_SAMPLES = 3
ATTACK_VARIANTS = 3
WDP_FLOOR = 0.6


def run(argv, ok_codes=(0,)):
    r = subprocess.run(argv, capture_output=True, text=True)
    assert r.returncode in ok_codes, f"{argv}\nstdout: {r.stdout}\nstderr: {r.stderr}"
    return r


def detect_wdp(image_path, key_path):
    r = run(PECCAVI + ["detect", "-i", str(image_path), "--key", str(key_path)],
            ok_codes=(0, 2))
    m = re.search(r"wdp=([0-9.]+)", r.stdout)
    assert m, f"unparseable detect output: {r.stdout!r}"
    return float(m.group(1)), r.returncode


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    """Calibrate, then push 3 samples through embed/attack/detect using
    adapter-generated saliency and paraphrases at every stage."""
    root = tmp_path_factory.mktemp("integration")
    key = root / "itest.key.json"
    write_clean_corpus(root / "clean")
    run(PECCAVI + ["calibrate", "--corpus", str(root / "clean"),
                   "--key", str(key), "--seed", "33"])

    results = []
    for i in range(N_SAMPLES):
        image = write_png(textured_rgb(400 + i), root / f"sample{i}.png")
        run(ADAPTERS + ["saliency", "-i", str(image), "--method", "gradmag"])
        nmp_dir = root / f"nmp{i}"
        run(ADAPTERS + ["paraphrase", "-i", str(image), "-o", str(nmp_dir),
                        "-n", "5", "-s", "0.15", "--seed", str(100 + i),
                        "--backend", "procedural"])

        marked = root / f"marked{i}.png"
        run(PECCAVI + ["embed", "-i", str(image), "-o", str(marked),
                       "--key", str(key), "--paraphrase-dir", str(nmp_dir),
                       "--saliency", "external"])
        pre_wdp, pre_rc = detect_wdp(marked, key)

        attack_dir = root / f"attack{i}"
        run(ADAPTERS + ["paraphrase", "-i", str(marked), "-o", str(attack_dir),
                        "-n", str(ATTACK_VARIANTS), "-s", "0.1",
                        "--seed", str(500 + i), "--backend", "procedural"])
        manifest = attack_dir / f"marked{i}.para.json"

        post_wdps = []
        for j in range(ATTACK_VARIANTS):
            attacked = root / f"attacked{i}_{j}.png"
            run(PECCAVI + ["attack", "-i", str(marked), "-o", str(attacked),
                           "--kind", "external", "--manifest", str(manifest),
                           "--index", str(j)])
            wdp, _ = detect_wdp(attacked, key)
            post_wdps.append(wdp)

        results.append({"image": image, "marked": marked, "nmp_dir": nmp_dir,
                        "manifest": manifest, "pre_wdp": pre_wdp,
                        "pre_rc": pre_rc, "post_wdps": post_wdps})
    return {"root": root, "key": key, "results": results}


def test_adapter_files_parse_through_pipeline_loaders(pipeline_run):
    from peccavi import load_external_saliency, load_paraphrase_manifest, saliency_path_for

    first = pipeline_run["results"][0]
    smap = load_external_saliency(saliency_path_for(first["image"]),
                                  expected_size=(256, 256))
    assert smap.source == "gradmag"
    assert (smap.width, smap.height) == (256, 256)
    assert 0.0 <= float(smap.values.min()) and float(smap.values.max()) == pytest.approx(1.0)

    manifest = load_paraphrase_manifest(first["manifest"])
    assert manifest.strength == 0.1
    assert len(manifest.paths) == ATTACK_VARIANTS
    for p in manifest.paths:
        assert p.is_file()


def test_method_name_travels_as_provenance(pipeline_run, tmp_path):
    # The sidecar's source field is free-form provenance; a map labelled
    # with a neural method name must round-trip through the loader intact.
    from peccavi import load_external_saliency
    from peccavi_adapters.common import save_gray16, write_json

    sal = np.linspace(0.0, 1.0, 64 * 48).reshape(48, 64)
    png = tmp_path / "img.sal.png"
    save_gray16(sal, png)
    write_json({"w": 64, "h": 48, "source": "xrai", "version": 1},
               tmp_path / "img.sal.json")
    smap = load_external_saliency(png)
    assert smap.source == "xrai"


def test_external_saliency_is_actually_required(pipeline_run):
    # Remove the adapter's map and the same embed invocation must fail:
    # proof the external files are load-bearing, not decorative.
    root = pipeline_run["root"]
    bare = write_png(textured_rgb(777), root / "bare.png")
    r = subprocess.run(PECCAVI + ["embed", "-i", str(bare),
                                  "-o", str(root / "bare_marked.png"),
                                  "--key", str(pipeline_run["key"]),
                                  "--saliency", "external"],
                       capture_output=True, text=True)
    assert r.returncode == 1
    assert "error:" in r.stderr


def test_embeds_detect_before_attack(pipeline_run):
    for res in pipeline_run["results"]:
        assert res["pre_rc"] == 0
        assert res["pre_wdp"] >= 0.9


def test_paraphrased_detection_meets_floor(pipeline_run):
    all_wdps = [w for res in pipeline_run["results"] for w in res["post_wdps"]]
    mean_wdp = float(np.mean(all_wdps))
    ok = mean_wdp >= WDP_FLOOR and len(pipeline_run["results"]) == N_SAMPLES
    print(f"\n[{'PASS' if ok else 'FAIL'}] adapter interchange drives pipeline "
          f"end-to-end — mean WDP after s=0.1 paraphrase {mean_wdp:.4f} "
          f"(floor {WDP_FLOOR}) over {len(all_wdps)} detections on "
          f"{N_SAMPLES} samples")
    assert mean_wdp >= WDP_FLOOR
