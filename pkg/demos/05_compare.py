"""Run the four controllers on the same arm and disturbance."""

from dtude import Scenario, compute_metrics, run_closed_loop
from dtude.simkern import CONTROLLERS

print(f"{'controller':<12} {'rms err 1':>10} {'rms err 2':>10} {'peak tau1':>10} {'energy':>12}")
for name in CONTROLLERS:
    m = compute_metrics(run_closed_loop(Scenario(controller=name, Ts=0.001, substeps=1)))
    print(f"{name:<12} {m.final_rms_error[0]:10.4f} {m.final_rms_error[1]:10.4f} "
          f"{m.peak_tau[0]:10.1f} {m.control_energy:12.4g}")
