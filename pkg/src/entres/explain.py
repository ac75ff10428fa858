"""Proof trees: minimal-depth justifications for merges within a solution.

A proof tree for a merge (a, b) is a node-labelled tree whose root is
labelled (a, b), whose leaves are database facts or similarity facts, and
whose internal nodes are either

  transitive  exactly two children labelled (d, f) and (f, e) for the
              node's label (d, e);
  rule        one child per relational body atom labelled with the matched
              fact, one child per similarity atom labelled with the scored
              pair, and one merge child for every two body occurrences of
              the same variable (or a body constant and its fact
              counterpart) carrying distinct constants. The node's label is
              the pair of constants the head variables were read from.

The rule-depth of a tree is the maximum number of rule nodes on any
root-to-leaf path; the level of a merge is the minimum rule-depth over its
proof trees. proof_tree() builds a tree realizing that minimum by replaying
the level chain: round i rule answers become depth-i rule nodes, and pairs
that only arise by closing a round are decomposed into transitive nodes
over that round's direct edges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .engine import Solution
from .errors import NotInSolution
from .matcher import SimResolver, Witness, answers
from .model import Constant, Database, EqRel, Fact, Kind, MergePair
from .rules import Rule, RuleBody, Specification, Var, transform


class NodeKind(Enum):
    RULE = "rule"
    TRANSITIVE = "transitive"
    FACT = "fact"
    SIM = "sim"


@dataclass(frozen=True, slots=True)
class SimEdge:
    """A scored similarity fact: func(a, b) = score."""

    func: str
    left: Constant
    right: Constant
    score: int


@dataclass(frozen=True, slots=True)
class ProofNode:
    kind: NodeKind
    pair: MergePair | None = None
    fact: Fact | None = None
    sim: SimEdge | None = None
    rule_label: str | None = None
    children: tuple["ProofNode", ...] = ()

    def label(self) -> str:
        if self.kind in (NodeKind.RULE, NodeKind.TRANSITIVE):
            assert self.pair is not None
            return f"({_text(self.pair.left)}, {_text(self.pair.right)})"
        if self.kind is NodeKind.FACT:
            assert self.fact is not None
            args = ", ".join(_text(c) for c in self.fact.args)
            return f"{self.fact.relation}({args})"
        assert self.sim is not None
        s = self.sim
        return (
            f"{_text(s.left)} ≈ {_text(s.right)} "
            f"[{s.func} {s.score / 100:.2f}]"
        )


@dataclass(frozen=True, slots=True)
class ProofTree:
    root: ProofNode
    pair: MergePair


def _text(c: Constant) -> str:
    return "<null>" if c.kind is Kind.NULL else c.text


def rule_depth(tree: ProofTree | ProofNode) -> int:
    """Maximum number of rule nodes on any root-to-leaf path."""
    node = tree.root if isinstance(tree, ProofTree) else tree
    below = max((rule_depth(ch) for ch in node.children), default=0)
    return below + 1 if node.kind is NodeKind.RULE else below


# ------------------------------------------------------------ construction


@dataclass(slots=True)
class _Edge:
    """One round's rule answer at representative level, with its
    witnesses."""

    rule: Rule
    u: Constant
    v: Constant
    witnesses: list[Witness]


@dataclass(slots=True)
class _Round:
    prev: EqRel
    edges: list[_Edge] = field(default_factory=list)


def _occurrences(body: RuleBody) -> dict[Var, list[tuple[int, int]]]:
    occ: dict[Var, list[tuple[int, int]]] = {}
    for ai, atom in enumerate(body.rel_atoms):
        for pi, term in enumerate(atom.args):
            if isinstance(term, Var):
                occ.setdefault(term, []).append((ai, pi))
    return occ


def _witness_key(w: Witness):
    return tuple(
        (f.relation,) + tuple((c.kind.value, c.text) for c in f.args)
        for f in w.facts
    )


class _Builder:
    def __init__(
        self,
        db: Database,
        spec: Specification,
        sims: SimResolver | None,
        sol: Solution,
        knobs: dict,
    ):
        self.db = db
        self.spec = spec
        self.sims = sims
        self.sol = sol
        self.knobs = knobs
        self.rounds: list[_Round] = []
        self.level: dict[MergePair, int] = {}
        self.cache: dict[MergePair, ProofNode] = {}
        self._run_chain()

    # -- the level chain, with witnesses kept per round

    def _run_chain(self) -> None:
        rules = transform(self.spec, "ub").hard
        e = EqRel(self.db.domain)
        while True:
            rnd = _Round(prev=e.clone())
            merged: list[tuple[int, int]] = []
            for rule in rules:
                ans = answers(
                    rule.body, rule.head, self.db, e, self.sims,
                    expand=False, witnesses=True, **self.knobs,
                )
                assert ans.witnesses is not None
                for u, v in sorted(
                    ans.rep_tuples, key=lambda t: (t[0].text, t[1].text)
                ):
                    if (
                        u == v
                        or not (u.is_entity() and v.is_entity())
                        or not self.sol.eq.same(u, v)
                    ):
                        continue
                    wits = sorted(ans.witnesses[(u, v)], key=_witness_key)
                    rnd.edges.append(_Edge(rule, u, v, wits))
                    merged.append((e.id_of(u), e.id_of(v)))
            before = e.nontrivial_pairs()
            changed = False
            for i, j in sorted(set(merged)):
                changed |= e.merge_ids(i, j)
            if not changed:
                break
            self.rounds.append(rnd)
            lvl = len(self.rounds)
            for pair in e.nontrivial_pairs() - before:
                self.level[pair] = lvl

    # -- tree assembly

    def build(self, a: Constant, b: Constant) -> ProofNode:
        pair = MergePair.of(a, b)
        got = self.cache.get(pair)
        if got is not None:
            return got
        lvl = self.level.get(pair)
        if lvl is None:
            raise NotInSolution(
                f"({a.text}, {b.text}) was not reached by the rule "
                f"application chain"
            )
        node = self._chain_pair(a, b, self.rounds[lvl - 1])
        self.cache[pair] = node
        return node

    def _chain_pair(self, a: Constant, b: Constant, rnd: _Round) -> ProofNode:
        """Tree for (a, b), which first holds after this round: a path of
        this round's rule answers and previous-round pairs, folded into
        right-nested transitive nodes."""
        hops = self._class_path(a, b, rnd)
        parts: list[tuple[Constant, Constant, ProofNode | None]] = []
        pos = a
        for hop, (edge, forward) in enumerate(hops):
            want_right = b if hop == len(hops) - 1 else None
            node, o_left, o_right = self._rule_node(
                edge, forward, rnd, pos, want_right
            )
            if o_left != pos:
                parts.append((pos, o_left, None))
            parts.append((o_left, o_right, node))
            pos = o_right
        if pos != b:
            parts.append((pos, b, None))
        built = [
            node if node is not None else self.build(x, y)
            for x, y, node in parts
        ]
        tree = built[-1]
        right = parts[-1][1]
        for (x, _y, _n), node in zip(reversed(parts[:-1]), reversed(built[:-1])):
            tree = ProofNode(
                kind=NodeKind.TRANSITIVE,
                pair=MergePair.of(x, right),
                children=(node, tree),
            )
        return tree

    def _class_path(
        self, a: Constant, b: Constant, rnd: _Round
    ) -> list[tuple[_Edge, bool]]:
        """Shortest chain of this round's rule edges from a's class to b's
        class under the previous round's relation, each with its traversal
        direction (True = the edge's u side is entered first)."""
        prev = rnd.prev
        adj: dict[int, list[tuple[int, int, tuple[_Edge, bool]]]] = {}
        for rank, edge in enumerate(rnd.edges):
            cu = prev.canon_id(prev.id_of(edge.u))
            cv = prev.canon_id(prev.id_of(edge.v))
            adj.setdefault(cu, []).append((cv, rank, (edge, True)))
            adj.setdefault(cv, []).append((cu, rank, (edge, False)))
        start = prev.canon_id(prev.id_of(a))
        goal = prev.canon_id(prev.id_of(b))
        if start == goal:
            raise NotInSolution(
                f"({a.text}, {b.text}) already holds before its level round"
            )
        parent: dict[int, tuple[int, tuple[_Edge, bool]]] = {start: (start, None)}  # type: ignore[dict-item]
        frontier = [start]
        while frontier and goal not in parent:
            nxt: list[int] = []
            for cls in frontier:
                for other, _rank, step in sorted(
                    adj.get(cls, ()), key=lambda t: (t[0], t[1])
                ):
                    if other not in parent:
                        parent[other] = (cls, step)
                        nxt.append(other)
            frontier = sorted(set(nxt))
        if goal not in parent:
            raise NotInSolution(
                f"no rule-answer path connects {a.text} and {b.text}"
            )
        hops: list[tuple[_Edge, bool]] = []
        at = goal
        while at != start:
            at, step = parent[at]
            hops.append(step)
        hops.reverse()
        return hops

    def _rule_node(
        self,
        edge: _Edge,
        forward: bool,
        rnd: _Round,
        want_left: Constant,
        want_right: Constant | None,
    ) -> tuple[ProofNode, Constant, Constant]:
        """Rule node for one answer edge, plus the original constants its
        label carries on each side. Prefers a witness whose head variables
        were read from the wanted constants, then the least witness."""
        rule = edge.rule
        lvar, rvar = rule.head if forward else (rule.head[1], rule.head[0])
        occ = _occurrences(rule.body)

        def side_consts(w: Witness, var) -> list[Constant]:
            return [w.facts[ai].args[pi] for ai, pi in occ[var]]

        def choice(w: Witness) -> tuple[Constant, Constant]:
            ls = side_consts(w, lvar)
            rs = side_consts(w, rvar)
            ol = want_left if want_left in ls else min(ls, key=lambda c: c.text)
            if want_right is not None and want_right in rs:
                orr = want_right
            else:
                orr = min(rs, key=lambda c: c.text)
            return ol, orr

        def rank(w: Witness):
            ol, orr = choice(w)
            return (
                ol != want_left,
                want_right is not None and orr != want_right,
                _witness_key(w),
            )

        wit = min(edge.witnesses, key=rank)
        o_left, o_right = choice(wit)

        children: list[ProofNode] = [
            ProofNode(kind=NodeKind.FACT, fact=f) for f in wit.facts
        ]
        need: set[MergePair] = set()
        for ai, atom in enumerate(rule.body.rel_atoms):
            for pi, term in enumerate(atom.args):
                if not isinstance(term, Var):
                    got = wit.facts[ai].args[pi]
                    if got != term:
                        need.add(MergePair.of(term, got))
        for var, places in occ.items():
            consts = [wit.facts[ai].args[pi] for ai, pi in places]
            for i, c1 in enumerate(consts):
                for c2 in consts[i + 1:]:
                    if c1 != c2:
                        need.add(MergePair.of(c1, c2))
        for sub in sorted(need, key=lambda p: (p.left.text, p.right.text)):
            children.append(self.build(sub.left, sub.right))
        for satom in rule.body.sim_atoms:
            sa = self._sim_const(satom.left, occ, wit)
            sb = self._sim_const(satom.right, occ, wit)
            assert self.sims is not None
            score = self.sims.score(satom.func_id, sa, sb)
            children.append(
                ProofNode(
                    kind=NodeKind.SIM,
                    sim=SimEdge(satom.func_id, sa, sb, score),
                )
            )
        node = ProofNode(
            kind=NodeKind.RULE,
            pair=MergePair.of(o_left, o_right),
            rule_label=rule.label,
            children=tuple(children),
        )
        return node, o_left, o_right

    @staticmethod
    def _sim_const(term, occ, wit: Witness) -> Constant:
        if isinstance(term, Var):
            ai, pi = occ[term][0]
            return wit.facts[ai].args[pi]
        return term


def proof_tree(
    db: Database,
    spec: Specification,
    sims: SimResolver | None,
    sol: Solution,
    pair: MergePair | tuple[Constant, Constant],
    **knobs,
) -> ProofTree:
    """A proof tree for the pair in the solution, of minimal rule-depth
    (equal to the pair's level)."""
    a, b = (pair.left, pair.right) if isinstance(pair, MergePair) else pair
    if a == b:
        raise ValueError("reflexive merges need no proof tree")
    target = MergePair.of(a, b)
    if target not in sol.eq:
        raise NotInSolution(f"({a.text}, {b.text}) is not merged in the solution")
    builder = _Builder(db, spec, sims, sol, knobs)
    return ProofTree(root=builder.build(a, b), pair=target)


# -------------------------------------------------------------- validation


def validate_proof_tree(
    tree: ProofTree,
    db: Database,
    spec: Specification,
    sims: SimResolver | None = None,
) -> list[str]:
    """Check the proof tree definition clause by clause, independently of
    how the tree was built. Returns human-readable violations; an empty
    list means the tree is valid."""
    issues: list[str] = []
    facts = set(db.facts)
    if tree.root.pair != tree.pair:
        issues.append("root: label differs from the explained merge")

    def visit(node: ProofNode, path: str) -> None:
        if node.kind is NodeKind.FACT:
            if node.children:
                issues.append(f"{path}: fact leaf has children")
            if node.fact not in facts:
                issues.append(f"{path}: {node.label()} is not a database fact")
            return
        if node.kind is NodeKind.SIM:
            if node.children:
                issues.append(f"{path}: similarity leaf has children")
            assert node.sim is not None
            if sims is not None:
                actual = sims.score(node.sim.func, node.sim.left, node.sim.right)
                if actual != node.sim.score:
                    issues.append(
                        f"{path}: recorded score {node.sim.score} but the "
                        f"resolver says {actual}"
                    )
            return
        if node.pair is None:
            issues.append(f"{path}: internal node without a pair label")
            return
        if node.kind is NodeKind.TRANSITIVE:
            _check_transitive(node, path)
        else:
            _check_rule(node, path)
        for i, ch in enumerate(node.children):
            visit(ch, f"{path}.children[{i}]")

    def _check_transitive(node: ProofNode, path: str) -> None:
        if len(node.children) != 2:
            issues.append(f"{path}: transitive node with "
                          f"{len(node.children)} children")
            return
        kinds = {ch.kind for ch in node.children}
        if not kinds <= {NodeKind.RULE, NodeKind.TRANSITIVE}:
            issues.append(f"{path}: transitive children must be merge nodes")
            return
        aset = {node.children[0].pair.left, node.children[0].pair.right}  # type: ignore[union-attr]
        bset = {node.children[1].pair.left, node.children[1].pair.right}  # type: ignore[union-attr]
        nset = {node.pair.left, node.pair.right}  # type: ignore[union-attr]
        if aset ^ bset != nset or len(aset & bset) != 1:
            issues.append(
                f"{path}: children labels do not chain through a shared "
                f"constant to the node label"
            )

    def _check_rule(node: ProofNode, path: str) -> None:
        rule = spec.rule_by_label(node.rule_label or "")
        if rule is None:
            issues.append(f"{path}: unknown rule {node.rule_label!r}")
            return
        fact_children = [c for c in node.children if c.kind is NodeKind.FACT]
        sim_children = [c for c in node.children if c.kind is NodeKind.SIM]
        merge_children = [
            c for c in node.children
            if c.kind in (NodeKind.RULE, NodeKind.TRANSITIVE)
        ]
        atoms = rule.body.rel_atoms
        if len(fact_children) != len(atoms):
            issues.append(
                f"{path}: {len(fact_children)} fact children for "
                f"{len(atoms)} body atoms"
            )
            return
        bound: dict[Var, list[Constant]] = {}
        need: set[MergePair] = set()
        for i, (atom, child) in enumerate(zip(atoms, fact_children)):
            f = child.fact
            assert f is not None
            if f.relation != atom.relation or len(f.args) != len(atom.args):
                issues.append(
                    f"{path}: fact child {i} does not instantiate "
                    f"{atom.relation}/{len(atom.args)}"
                )
                return
            for term, got in zip(atom.args, f.args):
                if isinstance(term, Var):
                    bound.setdefault(term, []).append(got)
                elif term != got:
                    need.add(MergePair.of(term, got))
        for var, consts in bound.items():
            for i, c1 in enumerate(consts):
                for c2 in consts[i + 1:]:
                    if c1 != c2:
                        need.add(MergePair.of(c1, c2))
        have = {c.pair for c in merge_children}
        for pair in need - have:
            issues.append(
                f"{path}: missing merge child "
                f"({pair.left.text}, {pair.right.text})"
            )
        for pair in have - need:
            issues.append(
                f"{path}: merge child ({pair.left.text}, {pair.right.text}) "
                f"is not required by the body instantiation"
            )
        x, y = rule.head
        xs = set(bound.get(x, ()))
        ys = set(bound.get(y, ()))
        nset = {node.pair.left, node.pair.right}  # type: ignore[union-attr]
        if not any(
            {ox, oy} == nset for ox in xs for oy in ys
        ):
            issues.append(
                f"{path}: head variables were never read from the node "
                f"label constants"
            )
        unused = list(sim_children)
        for satom in rule.body.sim_atoms:
            expect_left = _term_consts(satom.left, bound)
            expect_right = _term_consts(satom.right, bound)
            found = None
            for ch in unused:
                se = ch.sim
                assert se is not None
                if se.func != satom.func_id:
                    continue
                ok = (se.left in expect_left and se.right in expect_right) or (
                    se.right in expect_left and se.left in expect_right
                )
                if ok and se.score >= satom.threshold:
                    found = ch
                    break
            if found is None:
                issues.append(
                    f"{path}: no similarity child satisfies "
                    f"{satom.func_id} >= {satom.threshold / 100:.2f}"
                )
            else:
                unused.remove(found)
        for ch in unused:
            issues.append(f"{path}: extra similarity child {ch.label()}")

    def _term_consts(term, bound: dict[Var, list[Constant]]) -> set[Constant]:
        if isinstance(term, Var):
            return set(bound.get(term, ()))
        return {term}

    visit(tree.root, "root")
    return issues


# ----------------------------------------------------------------- export


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(tree: ProofTree, spec: Specification | None = None) -> str:
    """Deterministic DOT rendering: merge nodes as ellipses, fact and
    similarity leaves as boxes, rule nodes annotated with their rule label
    and optional description."""
    lines = ["digraph proof {", "  rankdir=TB;"]
    edges: list[str] = []
    counter = 0

    def visit(node: ProofNode) -> str:
        nonlocal counter
        name = f"n{counter}"
        counter += 1
        label = _dot_escape(node.label())
        shape = "box"
        if node.kind in (NodeKind.RULE, NodeKind.TRANSITIVE):
            shape = "ellipse"
        if node.kind is NodeKind.RULE and node.rule_label:
            note = node.rule_label
            rule = spec.rule_by_label(node.rule_label) if spec else None
            if rule is not None and rule.description:
                note += f": {rule.description}"
            label += f"\\n[{_dot_escape(note)}]"
        elif node.kind is NodeKind.TRANSITIVE:
            label += "\\n[transitive]"
        lines.append(f'  {name} [label="{label}", shape={shape}];')
        for ch in node.children:
            edges.append(f"  {name} -> {visit(ch)};")
        return name

    visit(tree.root)
    lines.extend(edges)
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(tree: ProofTree) -> str:
    """Nested JSON rendering of the tree (kind, label, children, plus the
    rule label and similarity score where they apply)."""

    def conv(node: ProofNode) -> dict:
        out: dict = {"kind": node.kind.value, "label": node.label()}
        if node.rule_label is not None:
            out["rule"] = node.rule_label
        if node.sim is not None:
            out["func"] = node.sim.func
            out["score"] = node.sim.score
        if node.children:
            out["children"] = [conv(ch) for ch in node.children]
        return out

    return json.dumps(conv(tree.root), indent=2, sort_keys=True)
