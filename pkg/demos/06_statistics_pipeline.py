# The comparison toolchain end to end: train a small grid of models,
# load the records back, and run the same analysis the CLI performs,
# then poke at the individual tests with hand-sized data.

import tempfile
from pathlib import Path

from actreg import (ModelSpec, RunConfig, analyze_records, bootstrap_ci,
                    linear_fit, load_records, one_way_anova, save_record,
                    synth_blobs, train, tukey_hsd, wilcoxon_signed_rank)
from actreg.rng import make_generator

records_dir = Path(tempfile.mkdtemp()) / "records"

# a 2-architecture comparison over 4 seeds on the same data
data = synth_blobs(classes=3, dim=16, n_per_class=80, separation=1.5, seed=5)
for arch in ("mlp", "bimodal"):
    spec = ModelSpec(arch, 16, 24, 3,
                     glia_ratio=1.0 if arch == "bimodal" else None)
    for seed in (42, 123, 456, 789):
        config = RunConfig(model=spec, lr=5e-3, batch_size=16, max_epochs=4,
                           patience=4, weight_decay=0.0, seed=seed)
        _, record = train(config, data)
        save_record(record, records_dir)

records, issues = load_records(records_dir)
print(f"loaded {len(records)} records, {len(issues)} rejected")
for table in analyze_records(records, response="test_accuracy"):
    print()
    print(table.to_text())

# the pieces individually, on numbers small enough to verify by eye
print()
groups = {"mlp": [0.81, 0.83, 0.80, 0.82],
          "wide": [0.86, 0.88, 0.85, 0.87],
          "deep": [0.84, 0.83, 0.85, 0.84]}
a = one_way_anova(groups)
print(f"one-way anova: F={a.f:.2f}, p={a.p:.4f}, partial eta^2={a.partial_eta2:.3f}")
for pair in tukey_hsd(groups):
    print(f"  {pair.group_a} vs {pair.group_b}: diff={pair.mean_diff:+.3f}, "
          f"p_adj={pair.p_adj:.4f}, reject={pair.reject}")

w = wilcoxon_signed_rank([0.02, 0.01, 0.04, -0.01, 0.03, 0.02, 0.05])
print(f"wilcoxon on paired deltas: W={w.statistic}, p={w.p:.4f} ({w.method})")

ci = bootstrap_ci([3.1, 2.9, 3.4, 3.0, 3.3, 2.8, 3.2], rng=make_generator(0))
print(f"bootstrap 95% CI for the mean: [{ci.lower:.3f}, {ci.upper:.3f}]")

fit = linear_fit([1, 2, 4, 8, 16], [2.1, 3.9, 8.2, 15.8, 32.1])
print(f"scaling fit: slope={fit.slope:.3f}, intercept={fit.intercept:.3f}, "
      f"R^2={fit.r_squared:.4f}")
