"""Bayesian-network structures: the generative DAG, recognition graphs and factor sets.

All objects here are immutable after construction and every operation is a
pure function of its inputs.
"""
import heapq
import json
from dataclasses import dataclass, field

from .errors import (CycleDetected, DuplicateName, GraphError, ObservedParentOfLatent,
                     TieGroupMismatch, UnknownVariable)

LATENT, OBSERVED = "latent", "observed"
CONTINUOUS, CATEGORICAL = "continuous", "categorical"


@dataclass(frozen=True)
class VariableSpec:
    """A node of the generative graph.

    ``size`` is the dimension of a continuous variable or the number of
    classes ``K`` of a categorical one (encoded one-hot, so it is also the
    feature width). Variables with the same ``tie_group`` share dependency
    function parameters and discriminators.
    """

    name: str
    kind: str = LATENT
    domain: str = CONTINUOUS
    size: int = 1
    tie_group: str = None

    def __post_init__(self):
        if self.kind not in (LATENT, OBSERVED):
            raise GraphError(f"{self.name}: kind must be latent or observed")
        if self.domain == CONTINUOUS and self.size < 1:
            raise GraphError(f"{self.name}: continuous dim must be >= 1")
        if self.domain == CATEGORICAL and self.size < 2:
            raise GraphError(f"{self.name}: categorical K must be >= 2")
        if self.domain not in (CONTINUOUS, CATEGORICAL):
            raise GraphError(f"{self.name}: unknown domain {self.domain!r}")

    @property
    def latent(self):
        return self.kind == LATENT

    @property
    def width(self):
        return self.size

    @property
    def signature(self):
        return (self.domain, self.size)

    def to_dict(self):
        key = "dim" if self.domain == CONTINUOUS else "K"
        d = {"name": self.name, "kind": self.kind, "domain": {"type": self.domain, key: self.size}}
        if self.tie_group is not None:
            d["tie_group"] = self.tie_group
        return d

    @classmethod
    def from_dict(cls, d):
        dom = d["domain"]
        size = dom["dim"] if dom["type"] == CONTINUOUS else dom["K"]
        return cls(d["name"], d["kind"], dom["type"], int(size), d.get("tie_group"))


def latent(name, dim=1, tie_group=None):
    return VariableSpec(name, LATENT, CONTINUOUS, dim, tie_group)


def categorical(name, K, tie_group=None):
    return VariableSpec(name, LATENT, CATEGORICAL, K, tie_group)


def observed(name, dim=1, tie_group=None):
    return VariableSpec(name, OBSERVED, CONTINUOUS, dim, tie_group)


@dataclass(frozen=True)
class Dag:
    nodes: tuple
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        # keep edges in a canonical order so equal graphs compare equal
        object.__setattr__(self, "edges", tuple(sorted({tuple(e) for e in self.edges})))

    @property
    def names(self):
        return [n.name for n in self.nodes]

    def index(self, name):
        for i, n in enumerate(self.nodes):
            if n.name == name:
                return i
        raise UnknownVariable(name)

    def spec(self, name):
        return self.nodes[self.index(name)]

    def __contains__(self, name):
        return any(n.name == name for n in self.nodes)

    def parents(self, name):
        ps = {p for p, c in self.edges if c == name}
        return [n for n in self.names if n in ps]

    def children(self, name):
        cs = {c for p, c in self.edges if p == name}
        return [n for n in self.names if n in cs]

    @property
    def latents(self):
        return [n.name for n in self.nodes if n.latent]

    @property
    def observed(self):
        return [n.name for n in self.nodes if not n.latent]

    def roots(self):
        return [n for n in self.names if not self.parents(n)]


def _check_names(dag):
    seen = set()
    for n in dag.nodes:
        if n.name in seen:
            raise DuplicateName(n.name)
        seen.add(n.name)
    for p, c in dag.edges:
        for v in (p, c):
            if v not in seen:
                raise UnknownVariable(v)


def _find_cycle(dag):
    """Return the node list of some directed cycle, or None."""
    colour = {n: 0 for n in dag.names}
    children = {n: dag.children(n) for n in dag.names}
    for start in dag.names:
        if colour[start]:
            continue
        stack = [(start, iter(children[start]))]
        path = [start]
        colour[start] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[node] = 2
                stack.pop()
                path.pop()
            elif colour[nxt] == 1:
                return path[path.index(nxt):] + [nxt]
            elif colour[nxt] == 0:
                colour[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(children[nxt])))
    return None


def validate_dag(dag):
    """Raise if ``dag`` has duplicate names, a cycle, or an observed parent of a latent."""
    _check_names(dag)
    cycle = _find_cycle(dag)
    if cycle is not None:
        raise CycleDetected(cycle)
    kinds = {n.name: n.latent for n in dag.nodes}
    for p, c in dag.edges:
        if kinds[c] and not kinds[p]:
            raise ObservedParentOfLatent(p, c)


def _kahn(names, preds, rank):
    """Kahn's algorithm; among ready nodes the lowest ``rank`` goes first."""
    indeg = {n: len(preds[n]) for n in names}
    succ = {n: [] for n in names}
    for n in names:
        for p in preds[n]:
            succ[p].append(n)
    ready = [(rank[n], n) for n in names if indeg[n] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        _, n = heapq.heappop(ready)
        order.append(n)
        for c in succ[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, (rank[c], c))
    return order


def topological_order(dag):
    """Parents before children; ties resolved by declaration order."""
    _check_names(dag)
    names = dag.names
    rank = {n: i for i, n in enumerate(names)}
    order = _kahn(names, {n: dag.parents(n) for n in names}, rank)
    if len(order) != len(names):
        raise CycleDetected(_find_cycle(dag) or [n for n in names if n not in order])
    return order


def markov_blanket(dag, v):
    """Parents, children and co-parents of ``v``."""
    if v not in dag:
        raise UnknownVariable(v)
    blanket = set(dag.parents(v)) | set(dag.children(v))
    for c in dag.children(v):
        blanket |= set(dag.parents(c))
    blanket.discard(v)
    return blanket


@dataclass(frozen=True)
class RecognitionGraph:
    """Conditioning set of every latent plus the order latents are sampled in."""

    conditioning: dict = field(default_factory=dict)
    elimination_order: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "conditioning",
                           {k: tuple(v) for k, v in self.conditioning.items()})
        object.__setattr__(self, "elimination_order", tuple(self.elimination_order))

    def parents(self, z):
        return self.conditioning[z]

    def factors(self):
        """``(z, conditioning)`` pairs in elimination order."""
        return [(z, self.conditioning[z]) for z in self.elimination_order]

    def check(self, dag):
        """Assert ancestral sampling in elimination order is well defined."""
        placed = set(dag.observed)
        for z in self.elimination_order:
            missing = [c for c in self.conditioning[z] if c not in placed]
            if missing:
                raise GraphError(f"{z} conditions on {missing} before they are sampled")
            placed.add(z)
        if sorted(self.elimination_order) != sorted(dag.latents):
            raise GraphError("elimination order must list every latent exactly once")


def leaves_to_root_order(dag):
    """Latents ordered so each comes before its latent parents.

    Kahn's algorithm on the reversed latent subgraph with declaration-order
    tie breaking.
    """
    topological_order(dag)  # cycle check
    lat = dag.latents
    rank = {n: dag.index(n) for n in lat}
    preds = {n: [c for c in dag.children(n) if c in rank] for n in lat}
    return _kahn(lat, preds, rank)


def inverse_factorization(dag):
    """Invert the generative graph latent by latent, leaves first.

    The recognition graph starts with every observed variable; each latent
    then conditions on the part of its Markov blanket already present.
    """
    validate_dag(dag)
    order = leaves_to_root_order(dag)
    present = set(dag.observed)
    cond = {}
    for z in order:
        blanket = markov_blanket(dag, z)
        cond[z] = tuple(n for n in dag.names if n in blanket and n in present)
        present.add(z)
    return RecognitionGraph(cond, order)


def mean_field(dag, overrides=None):
    """Every latent conditions on all observed variables (or an override subset)."""
    validate_dag(dag)
    overrides = dict(overrides or {})
    obs = dag.observed
    for z, xs in overrides.items():
        if z not in dag.latents:
            raise UnknownVariable(z)
        for x in xs:
            if x not in obs:
                raise UnknownVariable(x)
    cond = {z: tuple(overrides.get(z, obs)) for z in dag.latents}
    return RecognitionGraph(cond, dag.latents)


@dataclass(frozen=True)
class Factor:
    """A family ``(head, *parents)`` and every tied instance sharing its discriminator."""

    variables: tuple
    tie_group: str
    instances: tuple

    @property
    def head(self):
        return self.variables[0]


@dataclass(frozen=True)
class FactorSet:
    factors: tuple

    def __iter__(self):
        return iter(self.factors)

    def __len__(self):
        return len(self.factors)

    @property
    def size(self):
        """Number of factor instances (the averaging denominator)."""
        return sum(len(f.instances) for f in self.factors)

    def instances(self):
        return [inst for f in self.factors for inst in f.instances]

    @classmethod
    def single(cls, names, tie_group="all"):
        names = tuple(names)
        return cls((Factor(names, tie_group, (names,)),))


def extract_factors(dag):
    """One family ``(v, pa(v))`` per non-root variable, merged by tie group.

    Roots are dropped: their priors are fixed and only enter through the
    factors of their children.
    """
    validate_dag(dag)
    groups = {}
    for v in dag.names:
        pa = dag.parents(v)
        if not pa:
            continue
        inst = (v, *pa)
        specs = [dag.spec(n) for n in inst]
        key = tuple(s.tie_group or s.name for s in specs)
        sig = tuple(s.signature for s in specs)
        if key in groups:
            if groups[key][0] != sig:
                raise TieGroupMismatch(f"tied instance {inst} has domains {sig}, expected {groups[key][0]}")
            groups[key][1].append(inst)
        else:
            groups[key] = (sig, [inst])
    return FactorSet(tuple(Factor(insts[0], "|".join(key), tuple(insts))
                           for key, (_, insts) in groups.items()))


# graph description files

def dag_to_dict(dag):
    return {"variables": [n.to_dict() for n in dag.nodes],
            "edges": [list(e) for e in dag.edges]}


def dag_from_dict(d):
    dag = Dag(tuple(VariableSpec.from_dict(v) for v in d["variables"]),
              tuple(tuple(e) for e in d.get("edges", [])))
    validate_dag(dag)
    return dag


@dataclass
class GraphDescription:
    """Parsed graph description file: a DAG plus the recognition recipe.

    ``extra`` carries any further keys (``instance``, ``K``, ``T``, ``dims``,
    run settings) verbatim so that a load/dump round trip is lossless.
    """

    dag: Dag
    mode: str = "inverse"
    overrides: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def recognition(self):
        if self.mode == "inverse":
            return inverse_factorization(self.dag)
        if self.mode == "mean_field":
            return mean_field(self.dag, self.overrides)
        raise GraphError(f"unknown recognition mode {self.mode!r}")

    def to_dict(self):
        d = dict(self.extra)
        d.update(dag_to_dict(self.dag))
        rec = {"mode": self.mode}
        if self.overrides:
            rec["overrides"] = {k: list(v) for k, v in self.overrides.items()}
        d["recognition"] = rec
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        rec = d.pop("recognition", {"mode": "inverse"})
        dag = dag_from_dict({"variables": d.pop("variables"), "edges": d.pop("edges", [])})
        overrides = {k: list(v) for k, v in rec.get("overrides", {}).items()}
        desc = cls(dag, rec.get("mode", "inverse"), overrides, d)
        desc.recognition()  # validate mode and overrides
        return desc


def load_description(path):
    with open(path) as f:
        return GraphDescription.from_dict(json.load(f))


def dump_description(desc, path):
    with open(path, "w") as f:
        json.dump(desc.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
