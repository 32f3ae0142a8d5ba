"""Learn whole-bar labelings from whole-bar load curvature.

Builds the 786-load roster, trains the full-domain CNN (one 257-wide input,
257 sigmoid outputs), reports averaged test metrics and then checks one
unseen jump position end to end. Takes a few minutes on one core.
"""

from vhcm import pipeline
from vhcm.io import ExperimentConfig
from vhcm.loads import LoadSpec

cfg = ExperimentConfig(case="full_domain", seed=0)
ds, refs, report = pipeline.generate(cfg)
print(f"{report['loads']} loads -> split {report['split']} in {report['wall_time_s']:.1f} s")

model, hist = pipeline.fit(ds, cfg.train_config())
print(f"stopped after {len(hist.train_loss)} epochs, best {hist.best_epoch}")

m = pipeline.evaluate(model, ds)
print(f"test: average accuracy {m['accuracy']:.4f}, F1 {m['f1']:.4f}")
for k, v in m["confusion_percent"].items():
    print(f"  {k:8s} {v:6.2f} %")

grid, mat, bc = cfg.grid, cfg.material, cfg.bc
v = pipeline.verify_load(model, LoadSpec("f1", x_jump=0.71, delta=grid.delta), grid, mat, bc)
print(f"f1 jump at 0.71: predicted nonlocal nodes {v.intervals}, coupled error {v.error:.3e}")
