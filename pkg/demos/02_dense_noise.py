"""Error versus noise level for post-sign and pre-sign dense perturbations.

Post-sign noise rotates every phase by the same angle; pre-sign noise pushes
each measurement sideways before the phase is taken. Both degrade the
estimate roughly linearly in tau0.
"""

from phaseonly.experiment import ExperimentConfig, format_summary, run_experiment, summarize

common = dict(n=200, m=120, s=3, trials=8, base_seed=3, epsilon_mode="oracle")

for channel, grid in [("post", [0.05, 0.1, 0.2, 0.4]), ("pre", [0.05, 0.2, 0.5, 0.84])]:
    cfg = ExperimentConfig(channel=channel, grid=grid, **common)
    summary = summarize(run_experiment(cfg), loglog=False)
    print(f"\n{channel}-sign dense noise (oracle epsilon)")
    print(format_summary(summary, "tau0"))

# Theorem-mode radii are conservative: larger eps, larger error.
cfg = ExperimentConfig(channel="post", grid=[0.1], **{**common, "epsilon_mode": "theorem"})
print("\npost-sign, tau0 = 0.1, theorem epsilon = 5 tau0 / 2")
print(format_summary(summarize(run_experiment(cfg)), "tau0"))
