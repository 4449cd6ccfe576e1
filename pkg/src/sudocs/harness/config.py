"""Experiment configuration: JSON file -> validated, defaults-filled config."""
import copy
import enum
import json
from dataclasses import dataclass, field

from ..errors import ConfigurationError


class Experiment(str, enum.Enum):
    VERIFY_INDEPENDENCE = "verify-independence"
    VERIFY_GAUSSIANITY = "verify-gaussianity"
    PRIOR_APPROX = "prior-approx"
    SWEEP = "sweep"
    VERIFY_TRADEOFF = "verify-tradeoff"
    ONEBIT_NOISELESS = "onebit-noiseless"
    ONEBIT_NOISY = "onebit-noisy"
    FIT_RUNTIME = "fit-runtime"


# desk-scale defaults; every key can be overridden from the config file
_RUNTIME_GRID = {
    "part1_n": [5000, 10000, 20000, 40000],
    "part1_m1_ratio": [0.05, 0.1, 0.2, 0.3],
    "part2_n_tilde": [500, 1000, 2000, 3000],
    "part2_m2": [1000, 2000, 3000, 4000],
    "part2_s_tilde": 0.05,
}
# relative to the signal length, so the fit covers the frontier it is checked on
_RUNTIME_GRID_RELATIVE = {
    "part1_n_scale": [0.5, 1.0, 1.5, 2.0],
    "part1_m1_ratio": [0.02, 0.05, 0.1, 0.2],
    "part2_n_tilde_ratio": [0.01, 0.02, 0.05, 0.1, 0.2, 0.35, 0.6, 1.0],
    "part2_m2_ratio": [0.25, 0.4, 0.55, 0.7],
    "part2_s_tilde": 0.05,
    "part1_d": 0.8, "part1_eps": 0.05, "part1_c": 2,
}

# at N = 20000 the full survivor range would need multi-GB matrices; stop at 0.35 N
_RUNTIME_GRID_SWEEP = dict(_RUNTIME_GRID_RELATIVE,
                           part2_n_tilde_ratio=[0.01, 0.02, 0.05, 0.1, 0.2, 0.35],
                           part2_m2_ratio=[0.1, 0.2, 0.3, 0.35])

DEFAULTS = {
    Experiment.VERIFY_INDEPENDENCE: {
        "signal": {"s": 0.01},
        "measurement": {"d": 0.5, "eps": 0.01, "c": 4, "m1_ratio": 0.3, "snr_db": 30.0},
        "algorithm": {"n_ladder": [256, 1024, 4096, 16384]},
        "trials": 2000,
    },
    Experiment.VERIFY_GAUSSIANITY: {
        "signal": {"n": 5000, "s": 0.05},
        "measurement": {"d": 1.0, "eps": 0.1, "c": 2, "m1_ratio": 0.15, "m2_ratio": 0.4,
                        "snr_db": 10.0},
        "algorithm": {"max_lag": 50, "qq_points": 200},
        "trials": 50,
    },
    Experiment.PRIOR_APPROX: {
        "signal": {"n": 10000, "s": 0.01},
        "measurement": {"d": 0.4, "eps": 0.02, "c": 2, "m1_ratio": 0.05, "snr_db": 10.0},
        "algorithm": {"R": [0.3, 0.4, 0.5, 0.6, 0.7, 0.8], "t_max": 20},
        "trials": 20,
    },
    Experiment.SWEEP: {
        "signal": {"n": 20000, "s": 0.01},
        "measurement": {"snr_db": 10.0},
        "algorithm": {"R": [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
                      "grid": {"d": [0.4, 0.8, 1.5, 3.0], "eps": [0.02, 0.05, 0.1, 0.2],
                               "c": [1, 2, 3], "r": [0.05, 0.1, 0.2, 0.4]},
                      "bins": 30, "t_max": 20, "runtime_model": None,
                      "runtime": _RUNTIME_GRID_SWEEP},
        "trials": 1,
    },
    Experiment.VERIFY_TRADEOFF: {
        "signal": {"n": 10000, "s": 0.01},
        "measurement": {"snr_db": 10.0},
        "algorithm": {"R": [0.4, 0.7],
                      "grid": {"d": [0.4, 0.8, 1.5, 3.0], "eps": [0.02, 0.05, 0.1, 0.2],
                               "c": [1, 2, 3], "r": [0.05, 0.1, 0.2, 0.4]},
                      "bins": 30, "t_max": 20, "points_per_rate": 3,
                      "runtime": _RUNTIME_GRID_RELATIVE, "timed_trials": 3},
        "trials": 20,
    },
    Experiment.ONEBIT_NOISELESS: {
        "signal": {"n": 5000, "s": 0.005},
        "measurement": {"d": 0.8, "eps": 0.0, "c": 1, "m1_ratio": 0.1, "sigma_z2": 0.0},
        "algorithm": {"R": [0.5, 1.0, 1.5], "variant": "l1", "iters": [100], "baseline_iters": [100],
                      "timed_trials": 3},
        "trials": 50,
    },
    Experiment.ONEBIT_NOISY: {
        "signal": {"n": 2000, "s": 0.005},
        "measurement": {"d": 0.8, "eps": 0.08, "c": 3, "m1_ratio": 0.1, "sigma_z2": 10 ** -2.5},
        "algorithm": {"R": [1.0], "variant": "l2", "iters": [30, 130], "baseline_iters": [30, 130],
                      "timed_trials": 0},
        "trials": 20,
    },
    Experiment.FIT_RUNTIME: {
        "signal": {"s": 0.01},
        "measurement": {"d": 0.8, "eps": 0.05, "c": 2, "snr_db": 10.0},
        "algorithm": {"runtime": _RUNTIME_GRID},
        "trials": 1,
    },
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "grid":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ExperimentConfig:
    experiment: Experiment
    signal: dict = field(default_factory=dict)
    measurement: dict = field(default_factory=dict)
    algorithm: dict = field(default_factory=dict)
    trials: int = 1
    seed_base: int = 0
    output_dir: str = "out"
    threads: int = 1

    @classmethod
    def from_dict(cls, d, experiment=None):
        d = dict(d or {})
        name = experiment or d.get("experiment")
        try:
            exp = Experiment(name)
        except ValueError:
            raise ConfigurationError(f"unknown experiment {name!r}") from None
        base = DEFAULTS[exp]
        cfg = cls(exp,
                  _merge(base["signal"], d.get("signal")),
                  _merge(base["measurement"], d.get("measurement")),
                  _merge(base["algorithm"], d.get("algorithm")),
                  int(d.get("trials", base["trials"])),
                  int(d.get("seed_base", 0)),
                  str(d.get("output_dir", "out")),
                  int(d.get("threads", 1)))
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path, experiment=None):
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(d, experiment)

    def validate(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        s = self.signal.get("s")
        if s is not None and not 0 < s < 1:
            raise ConfigurationError(f"s must lie in (0, 1), got {s}")
        n = self.signal.get("n")
        if n is not None and n < 1:
            raise ConfigurationError("n must be >= 1")
        m = self.measurement
        if m.get("eps", 0) < 0 or m.get("sigma_z2", 0) < 0:
            raise ConfigurationError("eps and sigma_z2 must be >= 0")
        if "c" in m and m["c"] < 1:
            raise ConfigurationError("c must be >= 1")
        if "d" in m:
            if m["d"] <= 0:
                raise ConfigurationError("d must be positive")
            if n is not None and s is not None and m["d"] / (s * n) > 1:
                raise ConfigurationError("d/(s n) exceeds 1")
        for r in self.algorithm.get("R", []) or []:
            if r <= 0:
                raise ConfigurationError("measurement rates must be positive")

    def to_dict(self):
        return {"experiment": self.experiment.value, "signal": self.signal,
                "measurement": self.measurement, "algorithm": self.algorithm,
                "trials": self.trials, "seed_base": self.seed_base}

    def seeds(self):
        return range(self.seed_base, self.seed_base + self.trials)
