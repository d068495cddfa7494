"""Tests for pass flags, the pipeline runner and module emission."""

import pytest

from qiro.core.constants import BASELINE_PIPELINE, DEFAULT_PIPELINE
from qiro.core.errors import PipelineError, VerificationError
from qiro.services.lower_mem2val import lower_module
from qiro.services.parser import parse_file
from qiro.services.pipeline import (
    PassContext,
    PassPipeline,
    emit,
    estimate,
    expand_flags,
    quantum_gate_opt,
    resolve_flag,
)

ROTATIONS = """
q.circ @mlir_main() {
  %q = q.alloc : !q.qubit
  q.R(0.25) %q
  q.R(0.5) %q
  %m = q.meas %q : i1
  q.free %q
}
"""


def test_expand_default_pipeline():
    assert expand_flags(["--default-pipeline"]) == DEFAULT_PIPELINE + ["interpret"]
    assert expand_flags(["--canonicalize", "cse"]) == ["canonicalize", "cse"]


@pytest.mark.parametrize("flag, message", [
    ("--bogus", "unknown pass --bogus"),
    ("--canonicalize=3", "takes no option"),
    ("--affine-unroll=0", "at least 1"),
    ("--affine-unroll=two", "integer factor"),
])
def test_resolve_flag_errors(flag, message):
    with pytest.raises(PipelineError, match=message):
        resolve_flag(flag)


def test_resolve_flag_with_option():
    spec, option = resolve_flag("--affine-unroll=2")
    assert spec.name == "affine-unroll"
    assert option == "2"
    assert resolve_flag("--affine-unroll")[1] is None


def test_pipeline_names_and_interpret_flag():
    pipeline = PassPipeline(["--convert-mem-to-val", "--interpret"])
    assert pipeline.names == ["convert-mem-to-val", "interpret"]
    assert pipeline.interprets
    assert not PassPipeline(BASELINE_PIPELINE).interprets


def test_interpret_converts_remaining_quantum_ops(load_corpus):
    report = estimate(load_corpus("entangle.qiro"), ["--convert-mem-to-val", "--interpret"], {"n": 2})
    assert report.counts == {"H": 1, "CX": 2}


def test_timings_are_recorded_per_stage(load_corpus):
    timings = {}
    estimate(load_corpus("entangle.qiro"), args={"n": 2}, timings=timings)
    assert "convert-mem-to-val" in timings
    assert "interpret" in timings
    assert all(seconds >= 0 for seconds in timings.values())


def test_disabled_parts_keep_rotations(parse_text):
    context = PassContext(disabled=("rotation",))
    optimized = estimate(parse_text(ROTATIONS), context=PassContext())
    kept = estimate(parse_text(ROTATIONS), context=context)
    assert optimized.count("rotation") == 1
    assert kept.count("rotation") == 2


def test_quantum_gate_opt_reaches_a_fixpoint(parse_text):
    module = quantum_gate_opt(lower_module(parse_text(ROTATIONS)))
    assert sum(1 for op in module.walk() if op.name == "qs.R") == 1
    assert quantum_gate_opt(module) is module


def test_emit_round_trips(tmp_path, load_corpus):
    path = tmp_path / "out.qiro"
    module = PassPipeline(["--convert-mem-to-val", "--canonicalize"]).run(load_corpus("qft.qiro"))
    emit(module, path)
    reparsed = parse_file(str(path))
    assert [op.sym_name for op in reparsed.ops] == [op.sym_name for op in module.ops]


def test_emit_refuses_malformed_modules(tmp_path, parse_text):
    path = tmp_path / "out.qiro"
    bad = parse_text("q.circ @mlir_main() {\n  q.call @missing()\n}", verify_module=False)
    with pytest.raises(VerificationError):
        emit(bad, path)
    assert not path.exists()
