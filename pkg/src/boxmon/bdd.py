"""Reduced ordered binary decision diagrams over a fixed variable set.

The manager owns a hash-consed node store, so two equal sets of bit
strings are always represented by the same node handle.  Variables are
indexed 1..variable_count and appear in that order on every path; there
are no complement edges and no garbage collection (the arena lives as
long as the manager, which matches the monotone way the corner
pipeline builds sets).

A ref is only meaningful inside the manager that created it; combining
refs across managers raises ManagerMismatchError.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ManagerMismatchError, VariableIndexError

FALSE = 0
TRUE = 1


@dataclass(frozen=True)
class BddRef:
    """Handle to a node inside a specific manager."""

    manager: "BddManager"
    node: int

    def __eq__(self, other):
        return (
            isinstance(other, BddRef)
            and self.manager is other.manager
            and self.node == other.node
        )

    def __hash__(self):
        return hash((id(self.manager), self.node))

    def __repr__(self):
        return f"BddRef(node={self.node})"


class BddManager:
    """Node store plus the set operations the corner pipeline needs.

    Set semantics: a ref denotes a subset of {0,1}^variable_count, with
    variable m corresponding to string position m (1-based).
    """

    def __init__(self, variable_count: int):
        if variable_count < 1:
            raise VariableIndexError("variable_count must be >= 1")
        self.variable_count = variable_count
        # Node storage; slots 0/1 are the terminals.  The terminal "var"
        # sits one past the last real variable so ordering checks work.
        term = variable_count + 1
        self._var = [term, term]
        self._low = [-1, -1]
        self._high = [-1, -1]
        self._unique: dict[tuple[int, int, int], int] = {}
        self._cache: dict[tuple, int] = {}

    # -- construction ------------------------------------------------

    def mk_false(self) -> BddRef:
        return BddRef(self, FALSE)

    def mk_true(self) -> BddRef:
        return BddRef(self, TRUE)

    def mk_var(self, m: int) -> BddRef:
        self._check_var(m)
        return BddRef(self, self._node(m, FALSE, TRUE))

    def _node(self, var: int, low: int, high: int) -> int:
        if low == high:
            return low
        key = (var, low, high)
        found = self._unique.get(key)
        if found is not None:
            return found
        idx = len(self._var)
        self._var.append(var)
        self._low.append(low)
        self._high.append(high)
        self._unique[key] = idx
        return idx

    def _check_var(self, m: int) -> None:
        if not 1 <= m <= self.variable_count:
            raise VariableIndexError(
                f"variable {m} outside [1, {self.variable_count}]"
            )

    def _unwrap(self, ref: BddRef) -> int:
        if not isinstance(ref, BddRef) or ref.manager is not self:
            raise ManagerMismatchError("ref does not belong to this manager")
        return ref.node

    # -- boolean combinators ------------------------------------------

    def and_(self, a: BddRef, b: BddRef) -> BddRef:
        return BddRef(self, self._and(self._unwrap(a), self._unwrap(b)))

    def or_(self, a: BddRef, b: BddRef) -> BddRef:
        return BddRef(self, self._or(self._unwrap(a), self._unwrap(b)))

    def not_(self, a: BddRef) -> BddRef:
        return BddRef(self, self._not(self._unwrap(a)))

    def setminus(self, a: BddRef, b: BddRef) -> BddRef:
        """Set difference a \\ b, i.e. and(a, not(b))."""
        return BddRef(self, self._and(self._unwrap(a), self._not(self._unwrap(b))))

    def _and(self, u: int, v: int) -> int:
        if u == FALSE or v == FALSE:
            return FALSE
        if u == TRUE:
            return v
        if v == TRUE:
            return u
        if u == v:
            return u
        if u > v:
            u, v = v, u
        key = ("and", u, v)
        found = self._cache.get(key)
        if found is not None:
            return found
        ulo, uhi, vlo, vhi, var = self._cofactors(u, v)
        result = self._node(var, self._and(ulo, vlo), self._and(uhi, vhi))
        self._cache[key] = result
        return result

    def _or(self, u: int, v: int) -> int:
        if u == TRUE or v == TRUE:
            return TRUE
        if u == FALSE:
            return v
        if v == FALSE:
            return u
        if u == v:
            return u
        if u > v:
            u, v = v, u
        key = ("or", u, v)
        found = self._cache.get(key)
        if found is not None:
            return found
        ulo, uhi, vlo, vhi, var = self._cofactors(u, v)
        result = self._node(var, self._or(ulo, vlo), self._or(uhi, vhi))
        self._cache[key] = result
        return result

    def _not(self, u: int) -> int:
        if u == FALSE:
            return TRUE
        if u == TRUE:
            return FALSE
        key = ("not", u)
        found = self._cache.get(key)
        if found is not None:
            return found
        result = self._node(
            self._var[u], self._not(self._low[u]), self._not(self._high[u])
        )
        self._cache[key] = result
        return result

    def _cofactors(self, u: int, v: int):
        """Cofactors of u and v w.r.t. the smaller top variable."""
        var = min(self._var[u], self._var[v])
        if self._var[u] == var:
            ulo, uhi = self._low[u], self._high[u]
        else:
            ulo = uhi = u
        if self._var[v] == var:
            vlo, vhi = self._low[v], self._high[v]
        else:
            vlo = vhi = v
        return ulo, uhi, vlo, vhi, var

    # -- quantification ------------------------------------------------

    def exists(self, a: BddRef, m: int) -> BddRef:
        """Existential quantification over variable m: the set of strings
        agreeing with some member of a everywhere except possibly at m."""
        self._check_var(m)
        return BddRef(self, self._exists(self._unwrap(a), m))

    def _exists(self, u: int, m: int) -> int:
        var = self._var[u]
        if var > m:
            # ordered: m cannot appear below this node
            return u
        if var == m:
            return self._or(self._low[u], self._high[u])
        key = ("ex", u, m)
        found = self._cache.get(key)
        if found is not None:
            return found
        result = self._node(
            var, self._exists(self._low[u], m), self._exists(self._high[u], m)
        )
        self._cache[key] = result
        return result

    # -- counting and enumeration --------------------------------------

    def sat_count(self, a: BddRef) -> int:
        """Exact number of satisfying assignments over all variables."""
        u = self._unwrap(a)
        count = self._sat_count(u)
        return count << (self._var[u] - 1)

    def _sat_count(self, u: int) -> int:
        """Assignment count over the variables var(u)..variable_count."""
        if u == FALSE:
            return 0
        if u == TRUE:
            return 1
        key = ("cnt", u)
        found = self._cache.get(key)
        if found is not None:
            return found
        lo, hi = self._low[u], self._high[u]
        result = (self._sat_count(lo) << (self._var[lo] - self._var[u] - 1)) + (
            self._sat_count(hi) << (self._var[hi] - self._var[u] - 1)
        )
        self._cache[key] = result
        return result

    def enumerate_sat(self, a: BddRef, limit: int) -> list[str]:
        """The `limit` lexicographically smallest members of a, as full
        '0'/'1' strings (don't-care variables expanded, zeros first)."""
        u = self._unwrap(a)
        return list(itertools.islice(self._walk(u, 1), limit))

    def iter_sat(self, a: BddRef):
        """Iterate all members of a in lexicographic order."""
        return self._walk(self._unwrap(a), 1)

    def _walk(self, u: int, level: int):
        if u == FALSE:
            return
        if level > self.variable_count:
            yield ""
            return
        if u == TRUE or self._var[u] > level:
            for suffix in self._walk(u, level + 1):
                yield "0" + suffix
            for suffix in self._walk(u, level + 1):
                yield "1" + suffix
        else:
            for suffix in self._walk(self._low[u], level + 1):
                yield "0" + suffix
            for suffix in self._walk(self._high[u], level + 1):
                yield "1" + suffix

    def contains_string(self, a: BddRef, bits: str) -> bool:
        """Membership test for a single bit string."""
        if len(bits) != self.variable_count:
            raise VariableIndexError(
                f"string length {len(bits)} != variable count {self.variable_count}"
            )
        u = self._unwrap(a)
        for level in range(1, self.variable_count + 1):
            if u in (FALSE, TRUE):
                break
            if self._var[u] == level:
                u = self._high[u] if bits[level - 1] == "1" else self._low[u]
        return u == TRUE

    # -- diagnostics ----------------------------------------------------

    def node_count(self) -> int:
        """Number of live non-terminal nodes."""
        return len(self._var) - 2

    def check_canonical(self) -> None:
        """Structural audit of the node store; raises AssertionError on
        a violated invariant (redundant node, duplicate triple, or an
        ordering breach)."""
        seen: set[tuple[int, int, int]] = set()
        for idx in range(2, len(self._var)):
            var, lo, hi = self._var[idx], self._low[idx], self._high[idx]
            assert lo != hi, f"node {idx} has low == high"
            triple = (var, lo, hi)
            assert triple not in seen, f"duplicate node triple {triple}"
            seen.add(triple)
            assert 1 <= var <= self.variable_count, f"node {idx} var out of range"
            for child in (lo, hi):
                assert self._var[child] > var, f"ordering violated at node {idx}"
            assert self._unique.get(triple) == idx, "unique table out of sync"

    def to_dot(self, a: BddRef, name: str = "bdd") -> str:
        """GraphViz DOT rendering (solid high edge, dashed low edge)."""
        u = self._unwrap(a)
        lines = [f"digraph {name} {{"]
        lines.append('  n0 [shape=box, label="0"];')
        lines.append('  n1 [shape=box, label="1"];')
        stack, visited = [u], set()
        while stack:
            v = stack.pop()
            if v in visited or v in (FALSE, TRUE):
                continue
            visited.add(v)
            lines.append(f'  n{v} [label="bv{self._var[v]}"];')
            lines.append(f"  n{v} -> n{self._high[v]};")
            lines.append(f"  n{v} -> n{self._low[v]} [style=dashed];")
            stack.extend((self._low[v], self._high[v]))
        lines.append("}")
        return "\n".join(lines)
