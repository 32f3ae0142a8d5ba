"""Node-by-node classification from local windows, and loads never seen in training.

The windowed CNN only sees 33 nodes of curvature at a time, so it can
label loads with several singularities or shapes outside the training
families. Trains on f1/f2/f3 windows, then probes a tanh ramp, a narrow
gaussian and a load with two jumps.
"""

from vhcm import pipeline
from vhcm.io import ExperimentConfig
from vhcm.loads import LoadSpec, LoadSum

cfg = ExperimentConfig(case="window", seed=0)
ds, refs, report = pipeline.generate(cfg)
print(f"{report['samples']} unique windows from {report['loads']} loads, split {report['split']}")

model, hist = pipeline.fit(ds, cfg.train_config())
m = pipeline.evaluate(model, ds)
print(f"test accuracy {m['accuracy']:.4f}, F1 {m['f1']:.4f} ({len(hist.train_loss)} epochs)")

grid, mat, bc = cfg.grid, cfg.material, cfg.bc
probes = {
    "tanh ramp, t=0.05": LoadSpec("f4", t=0.05),
    "tanh ramp, t=0.0005": LoadSpec("f4", t=0.0005),
    "gaussian at 0.6": LoadSpec("f5", c=0.6),
    "two jumps (0.3, 0.7)": LoadSum((LoadSpec("f1", x_jump=0.3, delta=grid.delta),
                                     LoadSpec("f1", x_jump=0.7, delta=grid.delta))),
}
for name, load in probes.items():
    v = pipeline.verify_load(model, load, grid, mat, bc, name)
    print(f"{name:22s} nonlocal nodes {v.intervals}  error {v.error:.3e}")
