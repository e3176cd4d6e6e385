# %% [markdown]
# # Surrogate servo and reference set
#
# The benchmark plant is a collocated two-mass servo driven through a
# current saturation of 70 A. This script rebuilds it from the shipped
# config and checks the numbers that matter for the identification study:
# loop bandwidth, peak sensitivity, and how hard the references push the
# saturation.

# %%
import numpy as np

from hammerff.experiment import load_default_config
from hammerff.ilc import basis_matrix
from hammerff.plant import loop_metrics, run_trial
from hammerff.trajectory import peak_acceleration

cfg = load_default_config()
ts = cfg.sample_time
P, C = cfg.plant.linear_plant, cfg.plant.controller

# %%
m = loop_metrics(P, C)
print(f"crossover {m['bandwidth_hz']:.1f} Hz, max|S| {m['max_sensitivity_db']:.2f} dB, "
      f"pole radius {m['max_pole_modulus']:.4f}")

# %% [markdown]
# ## References
#
# Three rest-to-rest quintic moves: each shorter move has a higher peak
# acceleration. The training reference strings them together.

# %%
for lab, seg in zip(cfg.references.labels, cfg.references.segments):
    print(f"{lab}: {seg.distance * 1e3:.1f} mm in {seg.duration * 1e3:.0f} ms, "
          f"peak accel {peak_acceleration(seg):.2f} m/s^2")

r_train = cfg.references.training_reference(ts)
print("training samples:", r_train.size)

# %% [markdown]
# Peak rigid-body demand with the nominal gains. Anything near 70 A means the
# saturation bends the feedforward noticeably.

# %%
theta = np.asarray(cfg.nominal_theta)
demand = basis_matrix(r_train, cfg.preview) @ theta
print(f"peak nominal demand {np.max(np.abs(demand)):.1f} A")

# %% [markdown]
# ## Feedback only
#
# One trial per reference without feedforward, errors normalized by the
# stroke of r1.

# %%
plant = cfg.trial_plant()
for j in (0, 3, 5):
    r = cfg.references.trial_reference(j, ts)
    rec = run_trial(plant, r, np.zeros_like(r))
    print(f"trial {j + 1}: ||e|| / d1 = {rec.error_norm / cfg.motion_distance:.3e}, "
          f"max|u| = {np.max(np.abs(rec.u)):.1f} A")
