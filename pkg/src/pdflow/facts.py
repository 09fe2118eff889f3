"""Result values and return-flow facts read off a finished analysis.

A return-flow fact ``(site, lam, sig)`` says that the call at ``site``,
entering the function ``lam``, can return into a stack containing a frame
with signature ``sig``.  Every frame reachable beneath the call counts, so a
call that may return into the wrong caller shows up as a fact naming one of
that caller's frames.
"""

from __future__ import annotations

from . import baseline, cesik, delimited, pushdown
from .domains import AppR, Closure, frame_signature, show_value
from .konts import Empty, Push

__all__ = ["return_flow", "result_values", "returns_by_site"]


def _walk_table(kstore, konts) -> set:
    """Signatures of every frame reachable from ``konts`` through ``kstore``."""
    sigs = set()
    seen = set()
    work = list(konts)
    while work:
        k = work.pop()
        if k in seen or isinstance(k, Empty):
            continue
        seen.add(k)
        sigs.add(frame_signature(k.frame))
        work.extend(kstore.get(k.tail, ()))
    return sigs


def _walk_store(store, konts) -> set:
    sigs = set()
    seen = set()
    work = list(konts)
    while work:
        k = work.pop()
        if k in seen or not isinstance(k, Push):
            continue
        seen.add(k)
        sigs.add(frame_signature(k.frame))
        work.extend(x for x in store.get(k.tail, ()) if isinstance(x, (Empty, Push)))
    return sigs


def _walk_cesik(kstore, local, ref) -> set:
    sigs = {frame_signature(f) for f in local}
    seen = set()
    work = [ref]
    while work:
        r = work.pop()
        if r is cesik.DONE or r in seen:
            continue
        seen.add(r)
        for loc, r2 in kstore.get(r, ()):
            sigs |= {frame_signature(f) for f in loc}
            work.append(r2)
    return sigs


def _walk_sr(kstore, chi, k) -> set:
    sigs = set()
    seen = set()
    work = [k]
    while work:
        k = work.pop()
        if k in seen:
            continue
        seen.add(k)
        for fr, rest in delimited.sr_pop(kstore, chi, k):
            sigs.add(frame_signature(fr))
            work.append(rest)
    return sigs


def _calls(system):
    """``(state, AppR frame, signatures beneath)`` for each call about to enter."""
    # the view supports the indexed lookup that approximate contexts need
    kstore = system.views()["kstore"] if "kstore" in system.tables else {}
    for s in system.seen:
        if isinstance(s, pushdown.Co) and isinstance(s.kont, Push) and isinstance(s.kont.frame, AppR):
            yield s.kont.frame, _walk_table(kstore, kstore.get(s.kont.tail, ()))
        elif isinstance(s, baseline.BCo) and isinstance(s.kont, Push) and isinstance(s.kont.frame, AppR):
            if system.machine.name == "baseline-store":
                yield s.kont.frame, _walk_store(s.store, s.store.get(s.kont.tail, ()))
            else:
                yield s.kont.frame, _walk_table(kstore, kstore.get(s.kont.tail, ()))
        elif isinstance(s, cesik.ICo):
            for fr, loc, ref in cesik.pop(s.local, s.ref, kstore):
                if isinstance(fr, AppR):
                    yield fr, _walk_cesik(kstore, loc, ref)
        elif isinstance(s, delimited.SCo) and not isinstance(s.kont, Empty):
            for fr, rest in delimited.sr_pop(kstore, s.kclo, s.kont):
                if isinstance(fr, AppR):
                    yield fr, _walk_sr(kstore, s.kclo, rest)


def return_flow(system) -> frozenset:
    out = set()
    for fr, sigs in _calls(system):
        if not isinstance(fr.fn, Closure):
            continue
        lam = fr.fn.lam.label
        out.update((fr.site, lam, sig) for sig in sigs)
    return frozenset(out)


def returns_by_site(facts) -> dict:
    """Group facts by call site: ``site -> sorted list of (lam, sig)``."""
    out: dict = {}
    for site, lam, sig in facts:
        out.setdefault(site, []).append((lam, sig))
    return {k: sorted(v) for k, v in sorted(out.items())}


def result_values(system) -> list:
    return sorted({show_value(v) for v in system.results()})
