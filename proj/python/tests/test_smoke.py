import math

import numpy as np
import pytest

import otmeta

FIG = "NoCoda>>NoDeletion>>NoInsertion>>Onset"


def test_example_language():
    pairs = {
        "euzun": ".e.u.zu.ne.",
        "un": ".u.ne.",
        "xxxne": ".xe.xe.xe.ne.",
        "nezu": ".ne.zu.",
        "eznx": ".e.ze.ne.xe.",
        "zuxue": ".zu.xu.e.",
    }
    for inp, out in pairs.items():
        assert otmeta.optimize(inp, FIG) == out
        assert otmeta.oracle_optimize(inp, FIG) == out


def test_typology_and_universals():
    assert otmeta.constraint_sets()[0] == "Onset/NoCoda"
    ranks = otmeta.rankings()
    assert len(ranks) == 24
    assert len({otmeta.behavior_class(r) for r in ranks}) == 8
    assert otmeta.num_classes("Onset/Coda") == 13
    assert len(otmeta.universals()) == 24
    assert otmeta.violations("kep", FIG)["NoInsertion"] == 1


def test_bad_input_raises_value_error():
    with pytest.raises(ValueError):
        otmeta.optimize("k#", FIG)
    with pytest.raises(ValueError):
        otmeta.sample_dataset(1, condition="nonsense")


def test_dataset_round_trip():
    d = otmeta.sample_dataset(4, n_train=20, n_test=10)
    assert len(d.train) == 20 and len(d.test) == 10
    assert not d.validate()
    back = otmeta.Dataset.from_files(d.to_jsonl(), d.metadata())
    assert back == d
    lang = d.language
    for inp, out in d.train:
        assert lang.surface(inp) == out


def test_model_and_checkpoint(tmp_path):
    cfg = otmeta.ModelConfig(embed_dim=3, hidden_dim=4)
    p = otmeta.init_params(cfg, 7)
    assert p == otmeta.init_params(cfg, 7)
    assert "embedding" in p.names
    zero = p.unflatten(np.zeros(p.dimension))
    assert otmeta.loss([("ka", ".ka.")], zero, cfg) == pytest.approx(math.log(34), abs=1e-12)
    value, grad = otmeta.loss_and_gradient([("ka", ".ka.")], p, cfg)
    assert grad.flatten().shape == (p.dimension,)
    outs = otmeta.greedy_decode(["ka", "e"], p, cfg)
    assert len(outs) == 2
    path = str(tmp_path / "m.ckpt")
    otmeta.save_checkpoint(p, cfg, 7, path)
    q, qcfg, seed = otmeta.load_checkpoint(path)
    assert q == p and qcfg == cfg and seed == 7
    d = otmeta.sample_dataset(2, n_train=10, n_test=10)
    acc = otmeta.k_shot_eval(p, d, 10, cfg)
    assert 0.0 <= acc <= 1.0


def test_tiny_meta_train_is_deterministic():
    cfg = otmeta.ExperimentConfig()
    for k, v in {
        "model.embed_dim": "3",
        "model.hidden_dim": "4",
        "meta.n_train_languages": "6",
        "meta.n_holdout_languages": "2",
        "meta.eval_every": "3",
        "meta.shots": "10",
        "data.n_test": "5",
        "analysis.n_languages": "1",
    }.items():
        cfg.set(k, v)
    a = otmeta.meta_train(cfg)
    b = otmeta.meta_train(cfg)
    assert a[0] == b[0] and a[2] == b[2]
    assert len(a[2]) == 2
    csv = otmeta.analyze("pos-length-5", a[0], "meta", cfg)
    assert csv.startswith("analysis,init,condition,language,metric,value,censored")
    with pytest.raises(ValueError):
        cfg.set("no.such.key", "1")
