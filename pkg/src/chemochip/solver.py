"""Time stepping across all domains and species.

Each step freezes the chemotactic fluxes at time n, then solves the four
species in the order M, omega, T, phi. That order makes every solve linear
in its own unknown: omega's source needs the new M, T's kill rate needs the
new omega, phi's source needs the new T. Reaction coefficients that vary in
space or time stay on the right-hand side and are relaxed by fixed-point
iteration against a prefactorized constant matrix; the iteration is accepted
only when the full residual drops below the configured tolerance.

Domains are grouped into connected components of the coupling graph (an
edge per channel with nonzero K). Components are solved independently, so a
K=0 chip decomposes into runs that are arithmetically identical to
standalone single-domain runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from chemochip import scheme1d_hyperbolic as hyp
from chemochip import scheme1d_parabolic as s1d
from chemochip import scheme2d as s2d
from chemochip import transmission
from chemochip.diagnostics import SPECIES, MassLedger, positivity_monitor, total_mass
from chemochip.geometry import DiscreteLayout
from chemochip.model import ModelParams, drug_rate, kill_rate, monotonicity_check

__all__ = [
    "CFLReport",
    "RunResult",
    "SafeguardError",
    "SolveSettings",
    "SolverError",
    "SystemState",
    "advance_step",
    "cfl_check",
    "run_simulation",
]

_CELLS = ("T", "M")
_ORDER = ("M", "omega", "T", "phi")  # respects the source dependencies


class SolverError(RuntimeError):
    """Implicit solve failed to reach the requested residual."""


class SafeguardError(RuntimeError):
    """A safeguard configured to abort has tripped."""


@dataclass
class SolveSettings:
    channel_model: str = "parabolic"  # "parabolic" | "hyperbolic"
    tolerance: float = 1e-10
    max_iterations: int = 50
    viscosity: bool = True
    kk_threshold: float = 0.5
    on_monotonicity: str = "warn"  # "warn" | "abort"
    on_kk_ratio: str = "warn"
    check_every: int = 1

    def __post_init__(self):
        if self.channel_model not in ("parabolic", "hyperbolic"):
            raise ValueError(f"unknown channel model {self.channel_model!r}")
        if self.tolerance <= 0 or self.max_iterations < 1:
            raise ValueError("tolerance must be positive, max_iterations >= 1")


class SystemState:
    """All evolved fields at one time level."""

    def __init__(self, grid: DiscreteLayout, channel_model: str, t: float = 0.0):
        self.grid = grid
        self.channel_model = channel_model
        self.t = t
        nx, ny = grid.Nx + 2, grid.Ny + 2
        n = grid.N + 2
        self.chambers: dict[str, dict[str, np.ndarray]] = {}
        for side in self._chamber_sides():
            self.chambers[side] = {s: np.zeros((nx, ny)) for s in SPECIES}
        self.channels: list[dict[str, np.ndarray]] = []
        for _ in range(grid.layout.n_channels):
            ch = {s: np.zeros(n) for s in SPECIES}
            if channel_model == "hyperbolic":
                ch["vT"] = np.zeros(n)
                ch["vM"] = np.zeros(n)
            self.channels.append(ch)

    def _chamber_sides(self):
        return ("left", "right") if self.grid.layout.right_chamber else ("left",)

    def domains(self):
        yield from self._chamber_sides()
        for m in range(len(self.channels)):
            yield f"channel_{m}"

    def field(self, domain: str, species: str) -> np.ndarray:
        if domain in self.chambers:
            return self.chambers[domain][species]
        return self.channels[int(domain.split("_")[1])][species]

    def set_field(self, domain: str, species: str, values: np.ndarray) -> None:
        if domain in self.chambers:
            self.chambers[domain][species] = values
        else:
            self.channels[int(domain.split("_")[1])][species] = values

    def copy(self) -> "SystemState":
        out = SystemState(self.grid, self.channel_model, self.t)
        for side, fields in self.chambers.items():
            out.chambers[side] = {k: v.copy() for k, v in fields.items()}
        out.channels = [{k: v.copy() for k, v in ch.items()} for ch in self.channels]
        return out

    def finite(self) -> bool:
        for domain in self.domains():
            for key, v in (self.chambers.get(domain) or
                           self.channels[int(domain.split("_")[1])]).items():
                if not np.all(np.isfinite(v)):
                    return False
        return True


@dataclass(frozen=True)
class CFLReport:
    ok: bool
    entries: tuple  # (name, value, limit, ok)


def cfl_check(grid: DiscreteLayout, p: ModelParams, mode: str = "implicit",
              channel_model: str = "parabolic") -> CFLReport:
    """Von-Neumann step-size ratios; binding for explicit stepping only."""
    d_max = max(p.D_T, p.D_M, p.D_phi, p.D_omega)
    entries = []
    r2 = d_max * grid.dt * (1.0 / grid.dx**2 + 1.0 / grid.dy**2)
    entries.append(("parabolic_2d", r2, 0.5, r2 <= 0.5))
    r1 = d_max * grid.dt / grid.dx_channel**2
    entries.append(("parabolic_1d", r1, 0.5, r1 <= 0.5))
    if channel_model == "hyperbolic":
        lam = max(p.wave_speed_T, p.wave_speed_M)
        rh = lam * grid.dt / grid.dx_channel
        entries.append(("hyperbolic_1d", rh, 1.0, rh <= 1.0))
    ok = all(e[3] for e in entries)
    return CFLReport(ok=ok if mode == "explicit" else True, entries=tuple(entries))


# ---------------------------------------------------------------------------
# assembly


@dataclass
class _Block:
    domain: str
    kind: str  # "chamber" | "channel_par" | "channel_hyp"
    offset: int
    n: int  # node count (chambers: nx*ny)
    size: int  # unknown count (2n for hyperbolic blocks)


class _SpeciesSystem:
    """Constant linear system for one species on one component."""

    def __init__(self, blocks: list[_Block], P: sp.csr_matrix, H: sp.csr_matrix,
                 size: int):
        self.blocks = blocks
        self.P = P
        self.H = H
        self.size = size
        M = (sp.identity(size, format="csr") - P - H).tocsc()
        self.lu = spla.splu(M)
        self.M = M.tocsr()


def _components(grid: DiscreteLayout) -> list[list[str]]:
    """Connected components of the domain graph under nonzero-K channels."""
    lay = grid.layout
    nodes = ["left"] + (["right"] if lay.right_chamber else [])
    nodes += [f"channel_{m}" for m in range(lay.n_channels)]
    parent = {d: d for d in nodes}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        parent[find(a)] = find(b)

    for m in range(lay.n_channels):
        if lay.K_of(m) != 0.0:
            union(f"channel_{m}", "left")
            if lay.right_chamber:
                union(f"channel_{m}", "right")
    groups: dict[str, list[str]] = {}
    for d in nodes:
        groups.setdefault(find(d), []).append(d)
    return list(groups.values())


class _Assembly:
    """All prefactorized systems for a (grid, params, settings) triple."""

    def __init__(self, grid: DiscreteLayout, p: ModelParams, settings: SolveSettings):
        self.grid = grid
        self.p = p
        self.settings = settings
        self.systems: dict[tuple[int, str], _SpeciesSystem] = {}
        self.component_domains = _components(grid)
        for ci, domains in enumerate(self.component_domains):
            for species in SPECIES:
                self.systems[(ci, species)] = self._build(domains, species)

    def _hyperbolic_species(self, species: str) -> bool:
        return self.settings.channel_model == "hyperbolic" and species in _CELLS

    def _build(self, domains: list[str], species: str) -> _SpeciesSystem:
        grid, p = self.grid, self.p
        nx, ny = grid.Nx + 2, grid.Ny + 2
        n = grid.N + 2
        D = p.diffusivity(species)
        hyp_mode = self._hyperbolic_species(species)

        blocks: list[_Block] = []
        P_blocks = []
        offset = 0
        for domain in domains:
            if domain in ("left", "right"):
                blocks.append(_Block(domain, "chamber", offset, nx * ny, nx * ny))
                P_blocks.append(s2d.chamber_operator(nx, ny, grid.dx, grid.dy,
                                                     grid.dt, D))
                offset += nx * ny
            elif hyp_mode:
                blocks.append(_Block(domain, "channel_hyp", offset, n, 2 * n))
                P_blocks.append(sp.csr_matrix((2 * n, 2 * n)))
                offset += 2 * n
            else:
                blocks.append(_Block(domain, "channel_par", offset, n, n))
                P_blocks.append(s1d.channel_operator(n, grid.dx_channel, grid.dt, D))
                offset += n
        size = offset
        P = sp.block_diag(P_blocks, format="lil") if P_blocks else sp.lil_matrix((0, 0))
        H = sp.lil_matrix((size, size))
        if hyp_mode:
            lam = p.wave_speed_T if species == "T" else p.wave_speed_M
            for b in blocks:
                if b.kind == "channel_hyp":
                    Hb = hyp.hyperbolic_operator(n, grid.dx_channel, grid.dt, lam)
                    H[b.offset:b.offset + 2 * n, b.offset:b.offset + 2 * n] = Hb

        # Kedem-Katchalsky coupling entries
        offsets = {b.domain: b for b in blocks}
        for b in blocks:
            if not b.domain.startswith("channel_"):
                continue
            m = int(b.domain.split("_")[1])
            if grid.layout.K_of(m) == 0.0:
                continue
            for side, mouth_local in (("left", 0), ("right", n - 1)):
                if side == "right" and not grid.layout.right_chamber:
                    continue
                iface = grid.interface_indices(m, side)
                cb = offsets[side]
                wall_idx = [cb.offset + iface.i_wall * ny + j
                            for j in range(iface.j_a, iface.j_b + 1)]
                mouth_idx = b.offset + mouth_local
                transmission.add_wall_coupling(P, iface, grid.dt, grid.dx,
                                               grid.dy, wall_idx, mouth_idx)
                transmission.add_mouth_coupling(P, iface, grid.dt,
                                                grid.dx_channel, grid.dy,
                                                mouth_idx, wall_idx)
                if b.kind == "channel_hyp":
                    v_idx = b.offset + n + mouth_local
                    sign = 1.0 if side == "left" else -1.0
                    transmission.add_flux_constraint(H, iface, grid.dy,
                                                     mouth_idx, v_idx,
                                                     wall_idx, sign)
        P = P.tocsr()
        # uniform linear decay of the chemoattractants lives in the matrix
        if species == "phi":
            P = P - 0.5 * grid.dt * p.beta_phi * sp.identity(size, format="csr")
        elif species == "omega":
            P = P - 0.5 * grid.dt * p.beta_omega * sp.identity(size, format="csr")
        return _SpeciesSystem(blocks, P, H.tocsr(), size)


# ---------------------------------------------------------------------------
# stepping


def _reaction_fields(species: str, domain: str, state: SystemState,
                     new_fields: dict, t_n: float, t_np1: float,
                     p: ModelParams):
    """(c_n, c_np1, s_n, s_np1) for du/dt = ... - c u + s on one domain."""
    if species == "T":
        c_n = kill_rate(state.field(domain, "omega"), p) + drug_rate(t_n, "T", p)
        c_np1 = kill_rate(new_fields["omega"][domain], p) + drug_rate(t_np1, "T", p)
        return c_n, c_np1, 0.0, 0.0
    if species == "M":
        return drug_rate(t_n, "M", p), drug_rate(t_np1, "M", p), 0.0, 0.0
    if species == "phi":
        return 0.0, 0.0, p.alpha_phi * state.field(domain, "T"), \
            p.alpha_phi * new_fields["T"][domain]
    return 0.0, 0.0, p.alpha_omega * state.field(domain, "M"), \
        p.alpha_omega * new_fields["M"][domain]


def _gather(system: _SpeciesSystem, values: dict[str, np.ndarray],
            v_values: dict[str, np.ndarray] | None) -> np.ndarray:
    x = np.zeros(system.size)
    for b in system.blocks:
        if b.kind == "channel_hyp":
            x[b.offset:b.offset + b.n] = values[b.domain]
            x[b.offset + b.n:b.offset + 2 * b.n] = v_values[b.domain]
        else:
            x[b.offset:b.offset + b.size] = values[b.domain].reshape(-1)
    return x


def _solve_species(system: _SpeciesSystem, species: str, state: SystemState,
                   new_fields: dict, fluxes: dict, grid: DiscreteLayout,
                   p: ModelParams, settings: SolveSettings):
    """Advance one species on one component; returns per-domain arrays."""
    dt = grid.dt
    t_n, t_np1 = state.t, state.t + dt
    lam = (p.wave_speed_T if species == "T" else p.wave_speed_M) \
        if species in _CELLS else 0.0
    v_key = "v" + species if species in _CELLS else None

    x_n_fields = {b.domain: state.field(b.domain, species) for b in system.blocks}
    v_n_fields = {b.domain: state.field(b.domain, v_key)
                  for b in system.blocks if b.kind == "channel_hyp"} or None
    x_n = _gather(system, x_n_fields, v_n_fields)

    # base right-hand side: state carry-over, explicit convection/viscosity,
    # and the explicit halves of the reaction terms
    b_vec = np.zeros(system.size)
    reactions = []  # (block, c_np1 array-or-scalar, s_np1)
    any_implicit_c = False
    for blk in system.blocks:
        c_n, c_np1, s_n, s_np1 = _reaction_fields(species, blk.domain, state,
                                                  new_fields, t_n, t_np1, p)
        sl = slice(blk.offset, blk.offset + blk.n)
        xb = x_n_fields[blk.domain]
        if blk.kind == "channel_hyp":
            f = fluxes.get((blk.domain, species))
            f = f if f is not None else np.zeros(blk.n)
            b_vec[blk.offset:blk.offset + 2 * blk.n] = hyp.hyperbolic_rhs(
                xb, v_n_fields[blk.domain], f, grid.dx_channel, dt, lam)
            if np.any(np.asarray(s_np1) != 0.0):
                g = np.broadcast_to(np.asarray(s_np1, dtype=float), (blk.n,))
                b_vec[sl] += dt / 4.0 * (hyp.relax_weights(blk.n) @ g)
                b_vec[blk.offset + blk.n:blk.offset + 2 * blk.n] += \
                    lam * dt / 4.0 * (hyp.skew_weights(blk.n) @ g)
        else:
            b_vec[sl.start:blk.offset + blk.size] = xb.reshape(-1)
            E = None
            flux = fluxes.get((blk.domain, species))
            if flux is not None:
                if blk.kind == "chamber":
                    fx, fy, theta = flux
                    E = s2d.imex_terms_2d(fx, fy, theta, grid.dx, grid.dy, dt,
                                          settings.viscosity)
                else:
                    f1, th1 = flux
                    E = s1d.imex_terms_1d(f1, th1, grid.dx_channel, dt,
                                          settings.viscosity)
            if E is not None:
                b_vec[sl.start:blk.offset + blk.size] += E.reshape(-1)
            extra = (-0.5 * dt * np.asarray(c_n) * xb
                     + 0.5 * dt * (np.asarray(s_n) + np.asarray(s_np1)))
            if np.any(extra != 0.0):
                b_vec[sl.start:blk.offset + blk.size] += \
                    np.broadcast_to(extra, xb.shape).reshape(-1)
        has_c = np.any(np.asarray(c_np1) != 0.0)
        any_implicit_c = any_implicit_c or has_c
        if has_c:
            cc = np.broadcast_to(np.asarray(c_np1, dtype=float),
                                 xb.shape).reshape(-1)
        else:
            cc = None
        reactions.append((blk, cc))
    b_vec += system.P @ x_n

    def implicit_terms(x: np.ndarray) -> np.ndarray:
        out = np.zeros(system.size)
        for blk, cc in reactions:
            if cc is None:
                continue
            xu = x[blk.offset:blk.offset + blk.n]
            g = -cc * xu
            if blk.kind == "channel_hyp":
                out[blk.offset:blk.offset + blk.n] += \
                    dt / 4.0 * (hyp.relax_weights(blk.n) @ g)
                out[blk.offset + blk.n:blk.offset + 2 * blk.n] += \
                    lam * dt / 4.0 * (hyp.skew_weights(blk.n) @ g)
            else:
                out[blk.offset:blk.offset + blk.n] += 0.5 * dt * g
        return out

    # trivial zero solve (keeps untouched species bitwise zero)
    if not np.any(x_n) and not np.any(b_vec):
        x = x_n
    elif not any_implicit_c:
        x = system.lu.solve(b_vec)
    else:
        x = system.lu.solve(b_vec + implicit_terms(x_n))
        scale = max(float(np.abs(b_vec).max()), float(np.abs(x).max()), 1.0)
        for _ in range(settings.max_iterations):
            rhs = b_vec + implicit_terms(x)
            resid = float(np.abs(system.M @ x - rhs).max())
            if resid <= settings.tolerance * scale:
                break
            x = system.lu.solve(rhs)
        else:
            rhs = b_vec + implicit_terms(x)
            resid = float(np.abs(system.M @ x - rhs).max())
            if resid > settings.tolerance * scale:
                raise SolverError(
                    f"{species}: residual {resid:.3e} above tolerance after "
                    f"{settings.max_iterations} iterations")

    # scatter
    out: dict[str, np.ndarray] = {}
    out_v: dict[str, np.ndarray] = {}
    for blk in system.blocks:
        if blk.kind == "channel_hyp":
            out[blk.domain] = x[blk.offset:blk.offset + blk.n].copy()
            out_v[blk.domain] = x[blk.offset + blk.n:blk.offset + 2 * blk.n].copy()
        elif blk.kind == "chamber":
            out[blk.domain] = x[blk.offset:blk.offset + blk.size].reshape(
                grid.Nx + 2, grid.Ny + 2).copy()
        else:
            out[blk.domain] = x[blk.offset:blk.offset + blk.size].copy()
    return out, out_v


def _chemotactic_fluxes(state: SystemState, grid: DiscreteLayout,
                        p: ModelParams) -> dict:
    """Frozen time-n fluxes for M (T carries no chemotactic term)."""
    fluxes: dict = {}
    if p.k1 == 0.0:
        return fluxes
    for side in state.chambers:
        M = state.field(side, "M")
        phi = state.field(side, "phi")
        fluxes[(side, "M")] = s2d.chemotactic_flux_2d(M, phi, grid.dx, grid.dy, p)
    for m in range(len(state.channels)):
        dom = f"channel_{m}"
        M = state.field(dom, "M")
        phi = state.field(dom, "phi")
        if state.channel_model == "hyperbolic":
            f, _ = s1d.chemotactic_flux_1d(M, phi, grid.dx_channel, p)
            fluxes[(dom, "M")] = f
        else:
            fluxes[(dom, "M")] = s1d.chemotactic_flux_1d(M, phi, grid.dx_channel, p)
    return fluxes


def advance_step(state: SystemState, grid: DiscreteLayout, p: ModelParams,
                 settings: SolveSettings,
                 assembly: _Assembly | None = None) -> SystemState:
    """One full IMEX step of all species over all domains."""
    if assembly is None:
        assembly = _Assembly(grid, p, settings)
    fluxes = _chemotactic_fluxes(state, grid, p)

    new_fields: dict[str, dict[str, np.ndarray]] = {s: {} for s in SPECIES}
    new_v: dict[str, dict[str, np.ndarray]] = {"T": {}, "M": {}}
    for species in _ORDER:
        for ci in range(len(assembly.component_domains)):
            system = assembly.systems[(ci, species)]
            out, out_v = _solve_species(system, species, state, new_fields,
                                        fluxes, grid, p, settings)
            new_fields[species].update(out)
            if species in _CELLS:
                new_v[species].update(out_v)

    nxt = state.copy()
    nxt.t = state.t + grid.dt
    for species in SPECIES:
        for domain, arr in new_fields[species].items():
            nxt.set_field(domain, species, arr)
    if state.channel_model == "hyperbolic":
        for species in _CELLS:
            for domain, arr in new_v[species].items():
                nxt.set_field(domain, "v" + species, arr)
    if not nxt.finite():
        raise SolverError("non-finite state after step")
    return nxt


@dataclass
class RunResult:
    state: SystemState
    ledger: MassLedger
    safeguard_log: list = field(default_factory=list)
    min_density: float = 0.0
    steps: int = 0


def run_simulation(state: SystemState, grid: DiscreteLayout, p: ModelParams,
                   settings: SolveSettings, t_end: float,
                   snapshot_hook=None, snapshot_every: int = 0,
                   ledger_every: int = 1) -> RunResult:
    """Iterate advance_step to t_end with ledger/snapshot cadence.

    snapshot_hook(state, step) is called at the configured cadence and at the
    final step. Safeguard violations are logged; monotonicity/KK failures
    abort only when configured to.
    """
    n_steps = int(round(t_end / grid.dt))
    if abs(n_steps * grid.dt - t_end) > 1e-9 * max(t_end, grid.dt):
        raise ValueError("t_end must be a multiple of dt")

    assembly = _Assembly(grid, p, settings)
    ledger = MassLedger()
    log: list[str] = []
    min_density = 0.0

    kk = transmission.kk_ratio_check(grid, p, threshold=settings.kk_threshold)
    if not kk.ok:
        msg = f"KK ratio check failed: {kk.entries}"
        log.append(msg)
        if settings.on_kk_ratio == "abort":
            raise SafeguardError(msg)

    ledger.append(state.t, total_mass(state, grid))
    if snapshot_hook is not None:
        snapshot_hook(state, 0)

    for step in range(1, n_steps + 1):
        state = advance_step(state, grid, p, settings, assembly)
        if ledger_every and step % ledger_every == 0:
            ledger.append(state.t, total_mass(state, grid))
        if settings.check_every and step % settings.check_every == 0:
            mono = monotonicity_check(state, grid, p)
            if not mono.ok:
                msg = (f"step {step}: monotonicity violated "
                       f"(chemo {mono.chemo_margin:.3e}, kill {mono.kill_margin:.3e})")
                log.append(msg)
                if settings.on_monotonicity == "abort":
                    raise SafeguardError(msg)
            pos = positivity_monitor(state)
            min_density = min(min_density, pos.min_value)
            if not pos.ok:
                log.append(f"step {step}: density {pos.min_value:.3e} in "
                           f"{pos.domain}/{pos.species} at {pos.location}")
        if snapshot_hook is not None and snapshot_every and step % snapshot_every == 0:
            snapshot_hook(state, step)
    if (snapshot_hook is not None
            and n_steps > 0 and (not snapshot_every or n_steps % snapshot_every)):
        snapshot_hook(state, n_steps)
    if ledger_every and n_steps % ledger_every:
        ledger.append(state.t, total_mass(state, grid))
    return RunResult(state=state, ledger=ledger, safeguard_log=log,
                     min_density=min_density, steps=n_steps)
