"""Molecular graphs with valence semantics.

Atoms are (element, formal charge, explicit hydrogen count, aromatic flag);
bonds are undirected typed edges.  Graphs are connected, with no self-loops
and no parallel bonds, and every atom satisfies the valence table below.

Valence rules
-------------
Allowed total valences: B 3; C 4; N 3 or 5; O 2; P 3 or 5; S 2, 4 or 6;
F/Cl/Br/I 1.  Bond orders contribute 1 (single), 2 (double), 3 (triple).
Charge shifts the allowed set: +charge for N/P/O/S, -charge for B,
-(|charge|) for C and halogens.  Elements outside the table are accepted
(bracket atoms only) with no valence constraint.

Aromatic atoms use the ring-system contribution ``na + 1`` for b/c
(na = number of aromatic bonds), ``na`` for o/s, and for n/p ``na`` when the
atom carries an H or an extra substituent or sits at a three-ring junction
(pyrrole-like) else ``na + 1`` (pyridine-like).
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ChemError(ValueError):
    """Base class for chemistry-kernel errors."""


class ValenceError(ChemError):
    pass


class GraphStructureError(ChemError):
    pass


BOND_ORDERS = ("single", "double", "triple", "aromatic")
_BOND_VALUE = {"single": 1.0, "double": 2.0, "triple": 3.0, "aromatic": 1.5}
_BOND_CODE = {"single": 1, "double": 2, "triple": 3, "aromatic": 4}

ALLOWED_VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

ORGANIC_SUBSET = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC_SUBSET = ("b", "c", "n", "o", "p", "s")
HALOGENS = ("F", "Cl", "Br", "I")


def bond_value(order: str) -> float:
    return _BOND_VALUE[order]


def bond_code(order: str) -> int:
    return _BOND_CODE[order]


@dataclass(frozen=True)
class Atom:
    element: str
    charge: int = 0
    hydrogens: int = 0
    aromatic: bool = False


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    order: str


@dataclass
class MolecularGraph:
    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)

    def __post_init__(self):
        self._adj: list[list[tuple[int, str]]] | None = None

    def neighbors(self, i: int) -> list[tuple[int, str]]:
        """(neighbor index, bond order) pairs, in bond insertion order."""
        if self._adj is None:
            adj: list[list[tuple[int, str]]] = [[] for _ in self.atoms]
            for b in self.bonds:
                adj[b.i].append((b.j, b.order))
                adj[b.j].append((b.i, b.order))
            self._adj = adj
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def heavy_atom_count(self) -> int:
        return len(self.atoms)


def allowed_valences(atom: Atom) -> tuple[int, ...] | None:
    """Charge-adjusted allowed valences, or None when unconstrained."""
    base = ALLOWED_VALENCES.get(atom.element)
    if base is None:
        return None
    q = atom.charge
    if atom.element in ("N", "P", "O", "S"):
        shifted = tuple(v + q for v in base)
    elif atom.element == "B":
        shifted = tuple(v - q for v in base)
    else:  # C and halogens
        shifted = tuple(v - abs(q) for v in base)
    return tuple(v for v in shifted if v >= 0) or (0,)


def _aromatic_contribution(atom: Atom, n_aromatic: int, other_sum: float) -> float:
    el = atom.element
    if el in ("O", "S"):
        return float(n_aromatic)
    if el in ("N", "P"):
        if atom.hydrogens > 0 or other_sum > 0 or n_aromatic == 3:
            return float(n_aromatic)
        return float(n_aromatic + 1)
    return float(n_aromatic + 1)  # B, C and anything else aromatic


def atom_bond_total(graph: MolecularGraph, i: int) -> float:
    """Effective bond-order total for the valence check (aromatics resolved)."""
    atom = graph.atoms[i]
    n_aromatic = 0
    other = 0.0
    for _, order in graph.neighbors(i):
        if order == "aromatic":
            n_aromatic += 1
        else:
            other += _BOND_VALUE[order]
    if atom.aromatic or n_aromatic:
        return _aromatic_contribution(atom, n_aromatic, other) + other
    return other


def implicit_hydrogens(atom: Atom, bond_total: float) -> int:
    """Hydrogens filling the lowest consistent valence, or raise ValenceError."""
    allowed = allowed_valences(atom)
    if allowed is None:
        return 0
    for v in sorted(allowed):
        if v + 1e-9 >= bond_total:
            return int(round(v - bond_total))
    raise ValenceError(
        f"{atom.element} with bond total {bond_total:g} exceeds allowed valences {allowed}"
    )


def check_atom_valence(graph: MolecularGraph, i: int) -> None:
    atom = graph.atoms[i]
    allowed = allowed_valences(atom)
    if allowed is None:
        return
    total = atom_bond_total(graph, i) + atom.hydrogens
    if not any(abs(total - v) < 1e-9 for v in allowed):
        raise ValenceError(
            f"atom {i} ({atom.element}, charge {atom.charge:+d}, {atom.hydrogens}H) "
            f"has valence {total:g}, allowed {allowed}"
        )


def validate_graph(graph: MolecularGraph) -> None:
    """Structural + valence + connectivity invariants; raises on violation."""
    n = len(graph.atoms)
    if n == 0:
        raise GraphStructureError("empty graph")
    seen = set()
    for b in graph.bonds:
        if not (0 <= b.i < n and 0 <= b.j < n):
            raise GraphStructureError(f"bond ({b.i},{b.j}) out of range for {n} atoms")
        if b.i == b.j:
            raise GraphStructureError(f"self-loop on atom {b.i}")
        key = (min(b.i, b.j), max(b.i, b.j))
        if key in seen:
            raise GraphStructureError(f"parallel bond on pair {key}")
        seen.add(key)
        if b.order not in _BOND_VALUE:
            raise GraphStructureError(f"unknown bond order {b.order!r}")
    if n > 1:
        reached = {0}
        frontier = [0]
        while frontier:
            cur = frontier.pop()
            for nb, _ in graph.neighbors(cur):
                if nb not in reached:
                    reached.add(nb)
                    frontier.append(nb)
        if len(reached) != n:
            raise GraphStructureError("graph is not connected")
    for i in range(n):
        check_atom_valence(graph, i)


def ring_bonds(graph: MolecularGraph) -> set[tuple[int, int]]:
    """Unordered index pairs of bonds that lie on a cycle."""
    out: set[tuple[int, int]] = set()
    for b in graph.bonds:
        # b is a ring bond iff its endpoints stay connected without it
        target = b.j
        reached = {b.i}
        frontier = [b.i]
        found = False
        while frontier and not found:
            cur = frontier.pop()
            for nb, _ in graph.neighbors(cur):
                if cur == b.i and nb == b.j:
                    continue
                if cur == b.j and nb == b.i:
                    continue
                if nb in reached:
                    continue
                if nb == target:
                    found = True
                    break
                reached.add(nb)
                frontier.append(nb)
        if found:
            out.add((min(b.i, b.j), max(b.i, b.j)))
    return out


def ring_atoms(graph: MolecularGraph) -> set[int]:
    atoms: set[int] = set()
    for i, j in ring_bonds(graph):
        atoms.add(i)
        atoms.add(j)
    return atoms


def smallest_ring_sizes(graph: MolecularGraph) -> set[int]:
    """Smallest cycle length through each ring bond."""
    rb = ring_bonds(graph)
    sizes: set[int] = set()
    for i, j in rb:
        # BFS from i to j avoiding the direct edge
        dist = {i: 0}
        frontier = [i]
        while frontier:
            nxt = []
            for cur in frontier:
                for nb, _ in graph.neighbors(cur):
                    if (min(cur, nb), max(cur, nb)) == (i, j):
                        continue
                    if nb not in dist:
                        dist[nb] = dist[cur] + 1
                        nxt.append(nb)
            frontier = nxt
        if j in dist:
            sizes.add(dist[j] + 1)
    return sizes


def permute_graph(graph: MolecularGraph, perm: list[int]) -> MolecularGraph:
    """Relabel atoms so new index perm[i] holds old atom i."""
    n = len(graph.atoms)
    if sorted(perm) != list(range(n)):
        raise ValueError("perm must be a permutation of atom indices")
    atoms = [None] * n
    for old, new in enumerate(perm):
        atoms[new] = graph.atoms[old]
    bonds = [Bond(perm[b.i], perm[b.j], b.order) for b in graph.bonds]
    return MolecularGraph(list(atoms), bonds)
