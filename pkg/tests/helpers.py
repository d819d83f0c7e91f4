"""Small builders shared by the unit tests."""

from offload_sim.core_model import DeviceProfile, HostSnapshot, JobSpec, LinkEstimate, Role
from offload_sim.estimation import View

# acceptance results collected by test_acceptance.py, printed after the run
ACCEPTANCE_LINES = {}


def snap(host, n=0, te=4.0, pc=4.5, pu=2.5, pd=1.6, t=0.0, running_since=None):
    return HostSnapshot(host, n, te, pc, pu, pd, t, running_since)


def link(src, dst, ul=8 / 110e6, dl=8 / 110e6):
    return LinkEstimate(src, dst, ul, dl)


def job(origin="a", d=9.0, r=0.0, size_in=2.2e6, size_out=4096, jid=0):
    return JobSpec(jid, origin, r, d, size_in, size_out)


def view(origin, snapshots, links=None, workers=None, now=0.0, corrected=False):
    snaps = {s.host: s for s in snapshots}
    if links is None:
        links = {h: link(origin, h) for h in snaps if h != origin}
    return View(
        origin=origin,
        now=now,
        snapshots=snaps,
        links=links,
        workers=tuple(sorted(workers if workers is not None else snaps)),
        corrected_tc=corrected,
    )


def profile(host, role=Role.BOTH, te=4.0, pc=4.5, idle=1.5, pu=2.6, pd=2.0, up=110e6, down=110e6, jitter=0.0):
    return DeviceProfile(host, idle, pc, pu, pd, te, up, down, role, jitter)
