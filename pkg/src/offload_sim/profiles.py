"""Built-in device profiles for the five Android devices, the cloudlet and an
external job generator.

Values marked ``measured`` are the published per-device baselines. Values
marked ``fitted`` were not published per device; they were chosen so that
the published orderings and ratio ranges hold:

* per-job time and energy: Pixel 4 < Mi 9T < Tab S5e < S7e < Nexus 9;
* cloudlet runs jobs 1.9-5.8x faster and spends 2.4-15.6x more energy per
  job than the Android devices (both ends of each range are hit exactly);
* compute power is 2.3-4.1x idle power, upload 1.1-3.5x, download 1.1-1.8x;
* S7e has the lowest idle power; Pixel 4 and Mi 9T spend the least energy
  per job;
* cloudlet draws roughly 10-40x the power of the Android devices.

Link rates (bits/s) are the measured averages: 110 Mbit/s down on every
phone/tablet, 210 Mbit/s up on Nexus 9, Pixel 4 and S7e, 119 Mbit/s up on
Tab S5e and Mi 9T, and 941/946 Mbit/s up/down on the cloudlet.
"""

from __future__ import annotations

from typing import Dict

from .core_model import DeviceProfile, Role

MBIT = 1e6

# name: (p_idle, p_compute, p_upload, p_download, exec_time_mean, up, down, role, provenance)
_TABLE = {
    "pixel4": (1.00, 3.00, 2.50, 1.60, 3.00, 210, 110, Role.BOTH, "fitted"),
    "mi9t": (1.10, 3.82, 2.40, 1.50, 3.30, 119, 110, Role.BOTH, "fitted"),
    "tab_s5e": (1.50, 4.50, 2.60, 2.00, 4.00, 119, 110, Role.BOTH, "measured compute/time"),
    "s7e": (0.91, 3.70, 3.10, 1.50, 5.40, 210, 110, Role.BOTH, "measured compute/time"),
    "nexus9": (2.20, 6.38, 2.60, 2.50, 9.158, 210, 110, Role.BOTH, "fitted"),
    "cloudlet": (30.0, 88.9, 33.0, 32.0, 1.5789, 941, 946, Role.WORKER, "fitted"),
    "fc_generator": (1.00, 1.00, 2.50, 1.60, 1.0, 210, 110, Role.GENERATOR, "fitted"),
}

ANDROID = ("pixel4", "mi9t", "tab_s5e", "s7e", "nexus9")

PROVENANCE: Dict[str, str] = {name: row[-1] for name, row in _TABLE.items()}


def builtin_profiles(jitter: float = 0.1) -> Dict[str, DeviceProfile]:
    out = {}
    for name, (idle, pc, pu, pd, te, up, down, role, _) in _TABLE.items():
        out[name] = DeviceProfile(
            host=name,
            p_idle=idle,
            p_compute=pc,
            p_upload=pu,
            p_download=pd,
            exec_time_mean=te,
            uplink_bw=up * MBIT,
            downlink_bw=down * MBIT,
            role=role,
            exec_time_jitter=jitter,
        )
    return out
