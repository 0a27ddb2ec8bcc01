"""SMILES grammar: lexer, parser, validity, and canonical emission.

Supported subset: organic-subset atoms B C N O P S F Cl Br I, aromatic
b c n o p s, bracket atoms ``[<isotope?><symbol><chirality?><H?><charge?>]``,
bond symbols ``- = # :``, branches, ring closures 1-9 and ``%nn``.  Stereo
markers (/ \\ @ @@) and isotopes are accepted lexically and discarded with a
recorded warning.  Multi-fragment input ('.') is rejected.

Canonical form: Morgan-style iterative rank refinement over the invariant
(element, degree, charge, H count, aromatic, ring membership), ties broken
by (rank, atom index) during a deterministic DFS emission.
"""

from __future__ import annotations

import re

from .graph import (
    AROMATIC_SUBSET,
    Atom,
    Bond,
    ChemError,
    MolecularGraph,
    ORGANIC_SUBSET,
    ValenceError,
    atom_bond_total,
    bond_code,
    implicit_hydrogens,
    ring_atoms,
    validate_graph,
)


class SmilesParseError(ChemError):
    """Base class for SMILES parse failures."""


class LexicalError(SmilesParseError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class BranchError(SmilesParseError):
    pass


class RingClosureError(SmilesParseError):
    pass


class MultiFragmentError(SmilesParseError):
    pass


_BOND_SYMBOLS = {"-": "single", "=": "double", "#": "triple", ":": "aromatic"}
_BOND_WRITE = {"single": "-", "double": "=", "triple": "#", "aromatic": ":"}
_TWO_LETTER = ("Cl", "Br")

_BRACKET_RE = re.compile(
    r"^(?P<isotope>\d+)?"
    r"(?P<symbol>[A-Z][a-z]?|[bcnops])"
    r"(?P<chiral>@{1,2})?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>\+{1,2}|-{1,2}|\+\d+|-\d+)?$"
)


def _parse_bracket(body: str, pos: int, warnings: list[str]) -> Atom:
    m = _BRACKET_RE.match(body)
    if not m:
        raise LexicalError(f"malformed bracket atom [{body}]", pos)
    if m.group("isotope"):
        warnings.append(f"isotope {m.group('isotope')} discarded at position {pos}")
    if m.group("chiral"):
        warnings.append(f"chirality marker {m.group('chiral')} discarded at position {pos}")
    symbol = m.group("symbol")
    aromatic = symbol[0].islower()
    element = symbol.capitalize() if aromatic else symbol
    h = 0
    if m.group("hcount"):
        digits = m.group("hcount")[1:]
        h = int(digits) if digits else 1
    charge = 0
    c = m.group("charge")
    if c:
        if c in ("+", "++", "-", "--"):
            charge = c.count("+") - c.count("-")
        else:
            charge = int(c)
    return Atom(element, charge=charge, hydrogens=h, aromatic=aromatic)


def parse_smiles(s: str, warnings: list[str] | None = None) -> MolecularGraph:
    """Parse a SMILES string into a validated MolecularGraph.

    ``warnings`` (optional list) collects notes about discarded stereo and
    isotope annotations.
    """
    if warnings is None:
        warnings = []
    if not s:
        raise LexicalError("empty SMILES string", 0)

    atoms: list[Atom] = []
    implicit: list[bool] = []
    bonds: list[Bond] = []
    bond_keys: set[tuple[int, int]] = set()

    prev: int | None = None
    pending: str | None = None
    stack: list[int] = []
    open_rings: dict[int, tuple[int, str | None, int]] = {}  # num -> (atom, order, pos)

    def add_bond(i: int, j: int, order: str | None, pos: int) -> None:
        if i == j:
            raise RingClosureError(f"ring closure bonds atom {i} to itself at position {pos}")
        key = (min(i, j), max(i, j))
        if key in bond_keys:
            raise RingClosureError(f"duplicate bond between atoms {i} and {j} at position {pos}")
        if order is None:
            order = "aromatic" if atoms[i].aromatic and atoms[j].aromatic else "single"
        bond_keys.add(key)
        bonds.append(Bond(i, j, order))

    def add_atom(atom: Atom, implied_h: bool, pos: int) -> None:
        nonlocal prev, pending
        atoms.append(atom)
        implicit.append(implied_h)
        idx = len(atoms) - 1
        if prev is not None:
            add_bond(prev, idx, pending, pos)
        elif pending is not None:
            raise LexicalError("bond symbol with no preceding atom", pos)
        prev = idx
        pending = None

    def close_ring(num: int, pos: int) -> None:
        nonlocal pending
        if prev is None:
            raise RingClosureError(f"ring closure digit before any atom at position {pos}")
        if num in open_rings:
            other, other_order, _ = open_rings.pop(num)
            order = pending
            if order is None:
                order = other_order
            elif other_order is not None and other_order != order:
                raise RingClosureError(
                    f"ring {num} bond order conflict ({other_order} vs {order}) at position {pos}"
                )
            add_bond(other, prev, order, pos)
        else:
            open_rings[num] = (prev, pending, pos)
        pending = None

    i = 0
    n = len(s)
    while i < n:
        ch = s[i]
        if ch == ".":
            raise MultiFragmentError(f"multi-fragment SMILES ('.') at position {i}")
        if ch in _BOND_SYMBOLS:
            if pending is not None:
                raise LexicalError("two consecutive bond symbols", i)
            pending = _BOND_SYMBOLS[ch]
            i += 1
            continue
        if ch in "/\\":
            warnings.append(f"stereo bond marker {ch!r} discarded at position {i}")
            if pending is None:
                pending = "single"
            i += 1
            continue
        if ch == "(":
            if prev is None:
                raise BranchError(f"branch opened before any atom at position {i}")
            if pending is not None:
                raise LexicalError("bond symbol before branch open", i)
            stack.append(prev)
            i += 1
            continue
        if ch == ")":
            if not stack:
                raise BranchError(f"unmatched ')' at position {i}")
            if pending is not None:
                raise LexicalError("dangling bond symbol before ')'", i)
            prev = stack.pop()
            i += 1
            continue
        if ch == "[":
            end = s.find("]", i + 1)
            if end < 0:
                raise LexicalError("unterminated bracket atom", i)
            add_atom(_parse_bracket(s[i + 1 : end], i, warnings), implied_h=False, pos=i)
            i = end + 1
            continue
        if ch == "%":
            if i + 2 >= n or not s[i + 1 : i + 3].isdigit():
                raise LexicalError("'%' ring closure needs two digits", i)
            close_ring(int(s[i + 1 : i + 3]), i)
            i += 3
            continue
        if ch.isdigit():
            close_ring(int(ch), i)
            i += 1
            continue
        if s[i : i + 2] in _TWO_LETTER:
            add_atom(Atom(s[i : i + 2]), implied_h=True, pos=i)
            i += 2
            continue
        if ch in ORGANIC_SUBSET:
            add_atom(Atom(ch), implied_h=True, pos=i)
            i += 1
            continue
        if ch in AROMATIC_SUBSET:
            add_atom(Atom(ch.upper(), aromatic=True), implied_h=True, pos=i)
            i += 1
            continue
        raise LexicalError(f"unexpected character {ch!r}", i)

    if pending is not None:
        raise LexicalError("dangling bond symbol at end of input", n - 1)
    if stack:
        raise BranchError(f"unclosed branch ({len(stack)} open)")
    if open_rings:
        nums = sorted(open_rings)
        raise RingClosureError(f"unmatched ring closure digits {nums}")
    if not atoms:
        raise LexicalError("no atoms in SMILES string", 0)

    graph = MolecularGraph(atoms, bonds)
    # fill implicit hydrogens for organic-subset (non-bracket) atoms
    for idx, implied in enumerate(implicit):
        if not implied:
            continue
        total = atom_bond_total(graph, idx)
        h = implicit_hydrogens(graph.atoms[idx], total)
        a = graph.atoms[idx]
        graph.atoms[idx] = Atom(a.element, a.charge, h, a.aromatic)
    validate_graph(graph)
    return graph


def is_valid(s: str) -> bool:
    """True iff the string parses into a valence-consistent molecular graph."""
    try:
        parse_smiles(s)
        return True
    except Exception:
        return False


# -- canonical ranks and emission -------------------------------------------

def canonical_ranks(graph: MolecularGraph) -> list[int]:
    """Morgan-style iterative refinement of atom ranks; ties may remain only
    between (intended) automorphic atoms."""
    in_ring = ring_atoms(graph)
    invariants = [
        (a.element, graph.degree(i), a.charge, a.hydrogens, a.aromatic, i in in_ring)
        for i, a in enumerate(graph.atoms)
    ]
    uniq = sorted(set(invariants))
    ranks = [uniq.index(v) for v in invariants]
    classes = len(uniq)
    for _ in range(len(graph.atoms)):
        keys = []
        for i in range(len(graph.atoms)):
            nb = sorted((bond_code(order), ranks[j]) for j, order in graph.neighbors(i))
            keys.append((ranks[i], tuple(nb)))
        uniq_keys = sorted(set(keys))
        new_ranks = [uniq_keys.index(k) for k in keys]
        new_classes = len(uniq_keys)
        if new_classes == classes and new_ranks == ranks:
            break
        ranks, classes = new_ranks, new_classes
    return ranks


def _classify_edges(graph: MolecularGraph, priority) -> tuple[dict[int, list[int]], set[tuple[int, int]], int]:
    """Deterministic DFS: returns (tree children per atom, ring edges, root)."""
    order = sorted(range(len(graph.atoms)), key=priority)
    root = order[0]
    visited = {root}
    children: dict[int, list[int]] = {i: [] for i in range(len(graph.atoms))}
    ring: set[tuple[int, int]] = set()

    def visit(a: int, parent: int | None) -> None:
        for nb, _ in sorted(graph.neighbors(a), key=lambda t: priority(t[0])):
            if nb == parent:
                continue
            key = (min(a, nb), max(a, nb))
            if nb in visited:
                if key not in ring and nb != parent:
                    ring.add(key)
                continue
            visited.add(nb)
            children[a].append(nb)
            visit(nb, a)

    visit(root, None)
    return children, ring, root


def _bond_order(graph: MolecularGraph, i: int, j: int) -> str:
    for nb, order in graph.neighbors(i):
        if nb == j:
            return order
    raise KeyError((i, j))


def _bond_text(graph: MolecularGraph, i: int, j: int) -> str:
    order = _bond_order(graph, i, j)
    both_aromatic = graph.atoms[i].aromatic and graph.atoms[j].aromatic
    if order == "single":
        return "-" if both_aromatic else ""
    if order == "aromatic":
        return "" if both_aromatic else ":"
    return _BOND_WRITE[order]


def _atom_text(graph: MolecularGraph, i: int) -> str:
    a = graph.atoms[i]
    symbol = a.element.lower() if a.aromatic else a.element
    plain_ok = (
        a.charge == 0
        and a.element in ORGANIC_SUBSET
        and (not a.aromatic or a.element.lower() in AROMATIC_SUBSET)
    )
    if plain_ok:
        bare = Atom(a.element, 0, 0, a.aromatic)
        probe = MolecularGraph(
            [bare if k == i else atm for k, atm in enumerate(graph.atoms)], graph.bonds
        )
        try:
            if implicit_hydrogens(bare, atom_bond_total(probe, i)) == a.hydrogens:
                return symbol
        except ValenceError:
            pass
    h = "" if a.hydrogens == 0 else ("H" if a.hydrogens == 1 else f"H{a.hydrogens}")
    if a.charge == 0:
        q = ""
    elif a.charge == 1:
        q = "+"
    elif a.charge == -1:
        q = "-"
    else:
        q = f"{a.charge:+d}"
    return f"[{symbol}{h}{q}]"


def write_smiles(graph: MolecularGraph, priority) -> str:
    """Emit SMILES with DFS ordered by the ``priority(atom_index)`` key."""
    children, ring, root = _classify_edges(graph, priority)
    ring_partners: dict[int, list[int]] = {}
    for i, j in ring:
        ring_partners.setdefault(i, []).append(j)
        ring_partners.setdefault(j, []).append(i)

    open_digits: dict[tuple[int, int], int] = {}
    used: set[int] = set()
    emitted: set[int] = set()
    out: list[str] = []

    def alloc_digit() -> int:
        d = 1
        while d in used:
            d += 1
        if d > 99:
            raise ChemError("more than 99 simultaneously open rings")
        used.add(d)
        return d

    def digit_text(d: int) -> str:
        return str(d) if d <= 9 else f"%{d:02d}"

    def emit(a: int) -> None:
        emitted.add(a)
        out.append(_atom_text(graph, a))
        closers = []
        openers = []
        for p in ring_partners.get(a, ()):
            if p in emitted:
                closers.append(p)
            else:
                openers.append(p)
        for p in sorted(closers, key=lambda p: open_digits[(min(a, p), max(a, p))]):
            key = (min(a, p), max(a, p))
            d = open_digits.pop(key)
            out.append(_bond_text(graph, p, a) + digit_text(d))
            used.discard(d)
        for p in sorted(openers, key=priority):
            d = alloc_digit()
            open_digits[(min(a, p), max(a, p))] = d
            out.append(digit_text(d))
        kids = children[a]
        for k, child in enumerate(kids):
            last = k == len(kids) - 1
            if not last:
                out.append("(")
            out.append(_bond_text(graph, a, child))
            emit(child)
            if not last:
                out.append(")")

    emit(root)
    return "".join(out)


def canonical_smiles(graph: MolecularGraph) -> str:
    """Unique SMILES for the molecule, independent of the input atom order."""
    ranks = canonical_ranks(graph)
    return write_smiles(graph, priority=lambda i: (ranks[i], i))


def random_smiles(graph: MolecularGraph, seed: int) -> str:
    """A valid but arbitrarily-ordered SMILES of the same molecule (test aid)."""
    import random as _random

    rng = _random.Random(seed)
    perm = list(range(len(graph.atoms)))
    rng.shuffle(perm)
    return write_smiles(graph, priority=lambda i: perm[i])
