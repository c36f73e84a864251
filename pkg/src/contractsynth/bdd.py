"""Reduced ordered binary decision diagrams.

Hash-consed node store with an ite cache.  Node handles are ints; 0 and 1
are the terminals.  Two functions are semantically equal iff their handles
are equal.
"""

from __future__ import annotations

from .errors import CapExceeded

FALSE = 0
TRUE = 1


class Manager:
    def __init__(self, num_vars: int = 0, var_cap: int = 4096):
        self.var_cap = var_cap
        self.num_vars = 0
        # node -> (level, low, high); terminals use a sentinel level.
        self._nodes: list[tuple[int, int, int]] = [
            (1 << 30, FALSE, FALSE),
            (1 << 30, TRUE, TRUE),
        ]
        self._unique: dict[tuple[int, int, int], int] = {}
        self._ite_cache: dict[tuple[int, int, int], int] = {}
        self._op_cache: dict[tuple, int] = {}
        for _ in range(num_vars):
            self.new_var()

    def new_var(self) -> int:
        """Allocate the next variable level; returns its index."""
        if self.num_vars >= self.var_cap:
            raise CapExceeded(f"variable budget {self.var_cap} exceeded")
        self.num_vars += 1
        return self.num_vars - 1

    def size(self) -> int:
        return len(self._nodes)

    def level(self, node: int) -> int:
        return self._nodes[node][0]

    def low(self, node: int) -> int:
        return self._nodes[node][1]

    def high(self, node: int) -> int:
        return self._nodes[node][2]

    def _mk(self, level: int, low: int, high: int) -> int:
        if low == high:
            return low
        key = (level, low, high)
        node = self._unique.get(key)
        if node is None:
            node = len(self._nodes)
            self._nodes.append(key)
            self._unique[key] = node
        return node

    def var(self, index: int) -> int:
        if index >= self.num_vars:
            raise ValueError(f"variable {index} not allocated")
        return self._mk(index, FALSE, TRUE)

    def nvar(self, index: int) -> int:
        return self._mk(index, TRUE, FALSE)

    def ite(self, f: int, g: int, h: int) -> int:
        if f == TRUE:
            return g
        if f == FALSE:
            return h
        if g == h:
            return g
        if g == TRUE and h == FALSE:
            return f
        key = (f, g, h)
        out = self._ite_cache.get(key)
        if out is not None:
            return out
        nodes = self._nodes
        level = min(nodes[f][0], nodes[g][0], nodes[h][0])

        def cof(x: int, branch: int) -> int:
            entry = nodes[x]
            return entry[1 + branch] if entry[0] == level else x

        lo = self.ite(cof(f, 0), cof(g, 0), cof(h, 0))
        hi = self.ite(cof(f, 1), cof(g, 1), cof(h, 1))
        out = self._mk(level, lo, hi)
        self._ite_cache[key] = out
        return out

    def and_(self, f: int, g: int) -> int:
        return self.ite(f, g, FALSE)

    def or_(self, f: int, g: int) -> int:
        return self.ite(f, TRUE, g)

    def not_(self, f: int) -> int:
        return self.ite(f, FALSE, TRUE)

    def xor(self, f: int, g: int) -> int:
        return self.ite(f, self.not_(g), g)

    def iff(self, f: int, g: int) -> int:
        return self.ite(f, g, self.not_(g))

    def implies(self, f: int, g: int) -> int:
        return self.ite(f, g, TRUE)

    def conj(self, fs) -> int:
        out = TRUE
        for f in fs:
            out = self.and_(out, f)
        return out

    def disj(self, fs) -> int:
        out = FALSE
        for f in fs:
            out = self.or_(out, f)
        return out

    def exists(self, node: int, variables) -> int:
        """Existential quantification over the given variable indices."""
        var_set = frozenset(variables)
        if not var_set:
            return node

        cache_key = ("exists", var_set)

        def rec(n: int) -> int:
            if n <= TRUE:
                return n
            key = (cache_key, n)
            out = self._op_cache.get(key)
            if out is not None:
                return out
            level, lo, hi = self._nodes[n]
            if all(v < level for v in var_set):
                out = n
            elif level in var_set:
                out = self.or_(rec(lo), rec(hi))
            else:
                out = self._mk(level, rec(lo), rec(hi))
            self._op_cache[key] = out
            return out

        return rec(node)

    def forall(self, node: int, variables) -> int:
        return self.not_(self.exists(self.not_(node), variables))

    def compose(self, node: int, substitution: dict[int, int]) -> int:
        """Simultaneous substitution of variables by functions."""
        if not substitution:
            return node
        cache_key = ("compose", tuple(sorted(substitution.items())))

        def rec(n: int) -> int:
            if n <= TRUE:
                return n
            key = (cache_key, n)
            out = self._op_cache.get(key)
            if out is not None:
                return out
            level, lo, hi = self._nodes[n]
            g = substitution.get(level)
            if g is None:
                g = self.var(level)
            out = self.ite(g, rec(hi), rec(lo))
            self._op_cache[key] = out
            return out

        return rec(node)

    def restrict(self, node: int, assignment: dict[int, bool]) -> int:
        """Cofactor with respect to a partial variable assignment."""
        if not assignment:
            return node
        cache_key = ("restrict", tuple(sorted(assignment.items())))

        def rec(n: int) -> int:
            if n <= TRUE:
                return n
            key = (cache_key, n)
            out = self._op_cache.get(key)
            if out is not None:
                return out
            level, lo, hi = self._nodes[n]
            if level in assignment:
                out = rec(hi if assignment[level] else lo)
            else:
                out = self._mk(level, rec(lo), rec(hi))
            self._op_cache[key] = out
            return out

        return rec(node)

    def evaluate(self, node: int, assignment) -> bool:
        """Evaluate under a total assignment (dict or callable index->bool)."""
        get = assignment.__getitem__ if hasattr(assignment, "__getitem__") else assignment
        while node > TRUE:
            level, lo, hi = self._nodes[node]
            node = hi if get(level) else lo
        return node == TRUE

    def cube(self, assignment: dict[int, bool]) -> int:
        out = TRUE
        for index in sorted(assignment, reverse=True):
            lit = self.var(index) if assignment[index] else self.nvar(index)
            out = self.and_(out, lit)
        return out

    def sat_iter(self, node: int, variables):
        """All satisfying total assignments over `variables` (sorted indices)."""
        variables = sorted(variables)

        def rec(n: int, i: int, partial):
            if n == FALSE:
                return
            if i == len(variables):
                if n == TRUE:
                    yield dict(partial)
                return
            v = variables[i]
            level = self._nodes[n][0]
            if n <= TRUE or level > v:
                for val in (False, True):
                    partial[v] = val
                    yield from rec(n, i + 1, partial)
                del partial[v]
            elif level == v:
                _, lo, hi = self._nodes[n]
                for val, child in ((False, lo), (True, hi)):
                    partial[v] = val
                    yield from rec(child, i + 1, partial)
                del partial[v]
            else:
                # Node tests a variable not in `variables`: not a function of them.
                raise ValueError("diagram depends on a variable outside the enumeration set")

        yield from rec(node, 0, {})

    def cube_iter(self, node: int, variables):
        """Disjoint partial assignments (cubes) covering the on-set over `variables`."""
        variables = sorted(variables)
        var_set = set(variables)

        def rec(n: int, partial):
            if n == FALSE:
                return
            if n == TRUE or self._nodes[n][0] not in var_set:
                if n != TRUE:
                    raise ValueError("diagram depends on a variable outside the enumeration set")
                yield dict(partial)
                return
            level, lo, hi = self._nodes[n]
            for val, child in ((False, lo), (True, hi)):
                partial[level] = val
                yield from rec(child, partial)
            del partial[level]

        yield from rec(node, {})

    def support(self, node: int) -> set[int]:
        seen = set()
        out = set()

        def rec(n: int):
            if n <= TRUE or n in seen:
                return
            seen.add(n)
            level, lo, hi = self._nodes[n]
            out.add(level)
            rec(lo)
            rec(hi)

        rec(node)
        return out

    def dump_unique_table(self) -> str:
        lines = [f"{i}: var={lvl} low={lo} high={hi}" for i, (lvl, lo, hi) in enumerate(self._nodes)]
        return "\n".join(lines)
