"""
Oracle suites: enumeration, finite-difference, brute-force and determinism
checks of the whole pipeline on small synthetic instances.

Every check returns an OracleResult; `runOracleSuite` runs them all and the
CLI `oracle-check` subcommand exits nonzero iff one fails.
"""
import logging
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Set, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from config.settings import InferenceConfig, KgGenConfig, ModelConfig, TrainConfig
from datagen.entityLabeler import NameMatcher
from datagen.kgGenerator import generateKg
from datagen.questionGenerator import generateQuestions
from knowledge.kgStore import Direction, KnowledgeGraph, Triple
from knowledge.scope import ScopeCache, computeScope
from knowledge.vocabulary import Vocabulary, buildVocab
from model.baselineNet import BaselineNet
from model.context import ModelContext
from model.gradients import LossSpec, gradients
from model.kernels import answerDistribution, forwardPropagate, posteriorDistribution, topicDistribution
from model.objectives import elbo, elboFromPosterior, exactPosterior, learningSignal, marginalLoglik
from model.params import FREE, NAME_BOW, VrnParams, initParams
from templates.questionTemplates import PathStep, allTemplates
from utils.checkpointIo import decodeCheckpoint, encodeCheckpoint
from utils.seeding import substream

logger = logging.getLogger(__name__)


@dataclass
class OracleResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} ({self.seconds:.1f}s) {self.detail}"


# ---------------------------------------------------------------- toy builders


def randomGraph(rng: np.random.Generator, numEntities: int, numTriples: int, numRelations: int = 3) -> KnowledgeGraph:
    """Random simple graph with names e0, e1, ... and relations r0, r1, ..."""
    triples: List[Triple] = []
    seen: Set[Triple] = set()
    attempts = 0
    while len(triples) < numTriples and attempts < 20 * numTriples + 100:
        attempts += 1
        s, o = (int(x) for x in rng.integers(numEntities, size=2))
        t = Triple(s, int(rng.integers(numRelations)), o)
        if s == o or t in seen:
            continue
        seen.add(t)
        triples.append(t)
    return KnowledgeGraph(
        [f"e{i}" for i in range(numEntities)], [f"r{i}" for i in range(numRelations)], triples
    )


def toyContext(graph: KnowledgeGraph, hops: int, extraWords: int = 4) -> ModelContext:
    vocab = buildVocab(graph.entityTokens + [[f"w{i}" for i in range(extraWords)]])
    return ModelContext.build(graph, vocab, hops)


def toyParams(
    context: ModelContext,
    rng: np.random.Generator,
    dim: int = 3,
    scale: float = 0.5,
    mode: str = NAME_BOW,
    directional: bool = False,
    share: bool = False
) -> VrnParams:
    settings = ModelConfig(
        dim=dim, recognitionMode=mode, directionalRelations=directional, sharePosterior=share, initScale=scale
    )
    return initParams(settings, context.graph, context.vocab, rng)


def randomQuestion(rng: np.random.Generator, vocab: Vocabulary, length: int = 3) -> np.ndarray:
    return rng.integers(1, len(vocab), size=length)


def _timed(name: str, check: Callable[[], Tuple[bool, str]]) -> OracleResult:
    start = time.perf_counter()
    try:
        passed, detail = check()
    except Exception as e:
        logger.error(f"Oracle {name} raised: {e}", exc_info=True)
        passed, detail = False, f"raised {type(e).__name__}: {e}"
    return OracleResult(name, passed, detail, time.perf_counter() - start)


# ---------------------------------------------------------------- objectives


def checkElboBound(seed: int = 0, trials: int = 1000) -> OracleResult:
    """ELBO <= marginal log-likelihood for random parameters; equality under the exact posterior."""

    def check():
        rng = substream(seed, "oracle.elbo")
        worstGap, worstTight = -np.inf, 0.0
        for trial in range(trials):
            if trial % 50 == 0:
                context = toyContext(randomGraph(rng, 6, 8, 2), hops=int(rng.integers(1, 3)))
            params = toyParams(context, rng, scale=1.0)
            q = randomQuestion(rng, context.vocab)
            a = int(rng.integers(context.graph.numEntities))
            marginal = marginalLoglik(params, context, q, a)
            worstGap = max(worstGap, elbo(params, context, q, a) - marginal)
            tight = elboFromPosterior(params, context, q, a, exactPosterior(params, context, q, a))
            worstTight = max(worstTight, abs(tight - marginal))
        ok = worstGap <= 1e-9 and worstTight <= 1e-9
        return ok, f"max(elbo - loglik)={worstGap:.3e}, max|tight - loglik|={worstTight:.3e} over {trials} draws"

    return _timed("elbo-bound", check)


# ---------------------------------------------------------------- gradients


def _maxRelativeError(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-5) -> float:
    return float(np.max(np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)))


def finiteDifference(blocks: Dict[str, np.ndarray], loss: Callable[[], float], step: float = 1e-5) -> Dict[str, np.ndarray]:
    """Central differences of `loss` w.r.t. every entry of every block (perturbed in place)."""
    numeric = {}
    for name, block in blocks.items():
        out = np.zeros_like(block)
        flat, grad = block.reshape(-1), out.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            up = loss()
            flat[i] = original - step
            down = loss()
            flat[i] = original
            grad[i] = (up - down) / (2.0 * step)
        numeric[name] = out
    return numeric


def checkGradients(seed: int = 0, tolerance: float = 1e-4) -> OracleResult:
    """Analytic gradients of the four loss families against central finite differences."""

    def check():
        rng = substream(seed, "oracle.gradients")
        graph = randomGraph(rng, 8, 12, 2)
        worst: Dict[str, float] = {}
        for mode, directional, share in ((NAME_BOW, True, False), (FREE, False, True)):
            context = toyContext(graph, hops=2)
            params = toyParams(context, rng, mode=mode, directional=directional, share=share)
            q = randomQuestion(rng, context.vocab)
            y = int(rng.integers(graph.numEntities))
            scope = context.scopes.get(y)
            a = int(scope.entities[int(rng.integers(len(scope)))])
            blocks = params.blocks()
            families = {
                "topic": (LossSpec("topic", q, y=y),
                          lambda: topicDistribution(params.recognition, q, context).logProbOf(y)),
                "answer": (LossSpec("answer", q, y=y, a=a),
                           lambda: answerDistribution(params.reasoning, q, context.scopes.get(y)).logProbOf(a)),
                "posterior": (LossSpec("posterior", q, y=y, a=a),
                              lambda: posteriorDistribution(params.posterior, q, a, context).logProbOf(y)),
            }
            for family, (spec, loss) in families.items():
                analytic = gradients(spec, params, context)
                numeric = finiteDifference(blocks, loss)
                err = max(_maxRelativeError(analytic[k], numeric[k]) for k in blocks)
                worst[family] = max(worst.get(family, 0.0), err)

        baseline = BaselineNet(graph.numEntities, len(context.vocab), hidden=4, rng=rng, initScale=0.5)
        for block in baseline.blocks().values():
            block[...] = rng.uniform(-0.5, 0.5, size=block.shape)
        target = float(rng.normal())
        spec = LossSpec("baseline", q, a=a, target=target, baseline=baseline)
        analytic = gradients(spec, None, context)
        numeric = finiteDifference(baseline.blocks(), lambda: (baseline.predict(q, a) - target) ** 2)
        worst["baseline"] = max(_maxRelativeError(analytic[k], numeric[k]) for k in baseline.blocks())

        ok = all(err < tolerance for err in worst.values())
        return ok, ", ".join(f"{k}={v:.2e}" for k, v in worst.items())

    return _timed("gradient-check", check)


# ---------------------------------------------------------------- REINFORCE


def _psiSetup(seed: int, name: str, minScope: int = 3, maxScope: int = 10):
    rng = substream(seed, name)
    while True:
        graph = randomGraph(rng, 7, 9, 2)
        context = toyContext(graph, hops=2, extraWords=2)
        a = int(rng.integers(graph.numEntities))
        if minScope <= len(context.scopes.get(a)) <= maxScope:
            break
    params = toyParams(context, rng, dim=2, mode=FREE)
    q = randomQuestion(rng, context.vocab, length=2)
    posterior = posteriorDistribution(params.posterior, q, a, context)
    names = [k for k in params.blocks() if k.startswith("psi.")]
    scoreVectors = np.stack([
        np.concatenate([gradients(LossSpec("posterior", q, y=int(y), a=a), params, context)[k].ravel() for k in names])
        for y in posterior.support
    ])
    signals = np.array([learningSignal(params, context, q, a, int(y)) for y in posterior.support])
    return rng, posterior, scoreVectors, signals


def checkScoreIdentity(seed: int = 0, instances: int = 20) -> OracleResult:
    """Sum_y Q(y) grad log Q(y) = 0, so a constant baseline leaves the expected gradient unchanged."""

    def check():
        worstZero = worstShift = 0.0
        for i in range(instances):
            rng, posterior, scoreVectors, signals = _psiSetup(seed + i, "oracle.score")
            probs = posterior.probs
            worstZero = max(worstZero, float(np.abs(probs @ scoreVectors).max()))
            shift = float(rng.normal())
            exact = (probs * signals) @ scoreVectors
            shifted = (probs * (signals - shift)) @ scoreVectors
            worstShift = max(worstShift, float(np.abs(exact - shifted).max()))
        ok = worstZero <= 1e-9 and worstShift <= 1e-9
        return ok, f"max|E[grad log Q]|={worstZero:.2e}, max baseline shift effect={worstShift:.2e}"

    return _timed("score-identity", check)


def checkReinforceUnbiased(seed: int = 0, samples: int = 100_000) -> OracleResult:
    """Monte Carlo psi-gradient mean within 3 standard errors of the enumerated gradient."""

    def check():
        # Three support points: the sample counts have two free directions.
        rng, posterior, scoreVectors, signals = _psiSetup(seed, "oracle.reinforce", maxScope=3)
        weighted = signals[:, None] * scoreVectors
        exact = posterior.probs @ weighted
        draws = posterior.sample(rng, samples)
        counts = np.array([np.sum(draws == y) for y in posterior.support], dtype=np.float64) / samples
        mean = counts @ weighted
        variance = np.maximum(counts @ (weighted ** 2) - mean ** 2, 0.0)
        stderr = np.sqrt(variance / samples)
        z = np.abs(mean - exact) / np.maximum(stderr, 1e-300)
        z[np.abs(mean - exact) <= 1e-12] = 0.0
        return bool(np.all(z <= 3.0)), f"max z-score {z.max():.2f} over {len(z)} components, {samples} samples"

    return _timed("reinforce-unbiased", check)


# ---------------------------------------------------------------- scope


def bfsOracle(graph: KnowledgeGraph, y: int) -> np.ndarray:
    """Undirected hop distances from y (inf when unreachable)."""
    n = graph.numEntities
    rows = [t.subject for t in graph.triples]
    cols = [t.object for t in graph.triples]
    adjacency = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return shortest_path(adjacency, directed=False, unweighted=True, indices=y)


def oracleParents(graph: KnowledgeGraph, dist: np.ndarray, hops: int) -> Dict[int, List[Tuple[int, int, int]]]:
    parents: Dict[int, List[Tuple[int, int, int]]] = {}
    for t in graph.triples:
        if dist[t.object] <= hops and dist[t.subject] == dist[t.object] - 1:
            parents.setdefault(t.object, []).append((t.subject, t.relation, int(Direction.FORWARD)))
        if dist[t.subject] <= hops and dist[t.object] == dist[t.subject] - 1:
            parents.setdefault(t.subject, []).append((t.object, t.relation, int(Direction.BACKWARD)))
    return {e: sorted(p) for e, p in parents.items()}


def checkScopes(seed: int = 0, graphs: int = 100, probes: int = 10_000) -> OracleResult:
    """Scope membership, hops and parent sets against BFS; symmetry of membership."""

    def check():
        rng = substream(seed, "oracle.scope")
        built = []
        mismatches = 0
        for _ in range(graphs):
            n = int(rng.integers(2, 201))
            graph = randomGraph(rng, n, int(rng.integers(1, 2 * n + 1)))
            built.append(graph)
            for y in rng.choice(n, size=min(n, 3), replace=False):
                y = int(y)
                dist = bfsOracle(graph, y)
                hops = int(rng.integers(0, 4))
                scope = computeScope(graph, y, hops)
                expected = sorted(int(e) for e in np.flatnonzero(dist <= hops))
                if sorted(scope.entities.tolist()) != expected:
                    mismatches += 1
                    continue
                if any(node.hop != int(dist[node.entity]) for node in scope.nodes):
                    mismatches += 1
                    continue
                parents = oracleParents(graph, dist, hops)
                for node in scope.nodes:
                    got = sorted((int(scope.entities[p.parent]), p.relation, int(p.direction)) for p in node.parents)
                    if got != parents.get(node.entity, []):
                        mismatches += 1
                        break

        caches: Dict[Tuple[int, int], ScopeCache] = {}
        asymmetric = 0
        for _ in range(probes):
            g = int(rng.integers(len(built)))
            graph = built[g]
            hops = int(rng.integers(0, 4))
            cache = caches.setdefault((g, hops), ScopeCache(graph, hops))
            y, a = (int(v) for v in rng.integers(graph.numEntities, size=2))
            asymmetric += cache.get(y).contains(a) != cache.get(a).contains(y)

        ok = mismatches == 0 and asymmetric == 0
        return ok, f"{mismatches} oracle mismatches over {graphs} graphs, {asymmetric} asymmetric of {probes} probes"

    return _timed("scope-oracle", check)


def _spanningGraph(rng: np.random.Generator, n: int, extraEdges: int) -> KnowledgeGraph:
    """Random recursive tree over n nodes plus extra random edges."""
    triples = [Triple(int(rng.integers(i)), 0, i) for i in range(1, n)]
    seen = set(triples)
    while len(triples) < n - 1 + extraEdges:
        s, o = (int(x) for x in rng.integers(n, size=2))
        t = Triple(s, int(rng.integers(2)), o)
        if s != o and t not in seen:
            seen.add(t)
            triples.append(t)
    return KnowledgeGraph([f"e{i}" for i in range(n)], ["r0", "r1"], triples)


def checkPropagationScaling(seed: int = 0, nodes: int = 3000, runs: int = 5, maxRatio: float = 2.5) -> OracleResult:
    """Doubling the edges of a fixed node set at most maxRatio-times forward propagation time."""

    def check():
        rng = substream(seed, "oracle.scaling")
        timings, edgeCounts = [], []
        for extra in (nodes, 3 * nodes):
            graph = _spanningGraph(rng, nodes, extra)
            scope = computeScope(graph, 0, hops=nodes)
            context = toyContext(graph, hops=nodes)
            params = toyParams(context, rng, dim=64, scale=0.08)
            forwardPropagate(params.reasoning, scope)
            samples = []
            for _ in range(runs):
                start = time.perf_counter()
                result = forwardPropagate(params.reasoning, scope)
                samples.append(time.perf_counter() - start)
            if result.visits != len(scope) + scope.numParentEdges:
                return False, f"visit counter {result.visits} != nodes + parent edges"
            timings.append(float(np.median(samples)))
            edgeCounts.append(graph.numTriples)
        ratio = timings[1] / timings[0]
        return ratio <= maxRatio, f"|E| {edgeCounts[0]} -> {edgeCounts[1]}: time ratio {ratio:.2f}"

    return _timed("propagation-scaling", check)


def checkScopeScaling(seed: int = 0, nodes: int = 3000, runs: int = 5, maxRatio: float = 2.5) -> OracleResult:
    """Doubling the edges of a fixed node set at most maxRatio-times scope construction time."""

    def check():
        rng = substream(seed, "oracle.scopeScaling")
        timings, parentEdges = [], []
        for extra in (nodes, 3 * nodes):
            graph = _spanningGraph(rng, nodes, extra)
            computeScope(graph, 0, hops=nodes)
            samples = []
            for _ in range(runs):
                start = time.perf_counter()
                scope = computeScope(graph, 0, hops=nodes)
                samples.append(time.perf_counter() - start)
            if len(scope) != nodes:
                return False, f"scope covers {len(scope)} of {nodes} connected nodes"
            timings.append(float(np.median(samples)))
            parentEdges.append(scope.numParentEdges)
        ratio = timings[1] / timings[0]
        return ratio <= maxRatio, f"parent edges {parentEdges[0]} -> {parentEdges[1]}: time ratio {ratio:.2f}"

    return _timed("scope-scaling", check)


# ---------------------------------------------------------------- datasets


def walkAnswers(graph: KnowledgeGraph, topic: int, path: List[PathStep]) -> Set[int]:
    """Brute-force path execution over the raw triple list."""
    ends = {topic}
    for relationName, direction in path:
        relation = graph.relationIndex[relationName]
        reached = set()
        for t in graph.triples:
            if t.relation != relation:
                continue
            if direction is Direction.FORWARD and t.subject in ends:
                reached.add(t.object)
            elif direction is Direction.BACKWARD and t.object in ends:
                reached.add(t.subject)
        ends = reached
    ends.discard(topic)
    return ends


def smallKgConfig(seed: int) -> KgGenConfig:
    return KgGenConfig(movies=30, actors=25, directors=10, writers=10, genres=6, languages=4, years=10, seed=seed)


def checkDataset(seed: int = 0, perType: int = 3) -> OracleResult:
    """Answer sets match brute-force path execution, labels round-trip, every type instantiates."""

    def check():
        graph = generateKg(smallKgConfig(seed))
        matcher = NameMatcher(graph.entityNames)
        rng = substream(seed, "oracle.dataset")
        wrong = unlabeled = 0
        missing = []
        for template in allTemplates():
            items = generateQuestions(graph, [template], template.hops, perType, 1.0, rng, matcher=matcher)
            if not items:
                missing.append(template.typeId)
            for item in items:
                if set(item.answers) != walkAnswers(graph, item.sourceEntity, list(template.path)):
                    wrong += 1
                labeled = matcher.label(item.text)
                if labeled.ambiguous or labeled.names != [graph.entityNames[item.sourceEntity]]:
                    unlabeled += 1
        twoHop = sum(t.hops == 2 for t in allTemplates())
        threeHop = sum(t.hops == 3 for t in allTemplates())
        ok = wrong == 0 and unlabeled == 0 and not missing and twoHop == 21 and threeHop == 15
        return ok, (f"{wrong} wrong answer sets, {unlabeled} label round-trip failures, "
                    f"{len(missing)} missing types, {twoHop} two-hop / {threeHop} three-hop types")

    return _timed("dataset-oracle", check)


# ---------------------------------------------------------------- determinism


def _itemKey(item) -> tuple:
    return (tuple(item.tokens), item.answers, item.typeId, item.topicEntity)


def _trainTrajectory(seed: int) -> bytes:
    from agents.pretrainAgent import PretrainAgent
    from agents.reinforceAgent import ReinforceAgent

    graph = generateKg(smallKgConfig(seed))
    items = generateQuestions(graph, [t for t in allTemplates() if t.hops == 1], 1, 24, 0.5, substream(seed, "datagen"))
    vocab = buildVocab(graph.entityTokens + [i.tokens for i in items])
    context = ModelContext.build(graph, vocab, 1)
    settings = ModelConfig(dim=8)
    trainConfig = TrainConfig(pretrainEpochs=1, batchSize=8, samples=4, totalSteps=3)
    params = initParams(settings, graph, vocab, substream(seed, "init"))
    PretrainAgent(context, params, trainConfig).run([i for i in items if i.isLabeled], substream(seed, "pretrain"))
    baseline = BaselineNet(graph.numEntities, len(vocab), hidden=8, rng=substream(seed, "baseline"))
    agent = ReinforceAgent(context, params, baseline, trainConfig)
    agent.run(items, substream(seed, "sampling"))
    return encodeCheckpoint(agent.checkpoint())


def checkDeterminism(seed: int = 0, questions: int = 1000) -> OracleResult:
    """Same seed, same bytes; checkpoint round-trip; greedy equals top-1 restricted beam."""

    def check():
        from agents.inferenceAgent import InferenceAgent

        problems = []
        graphs = [generateKg(smallKgConfig(seed)) for _ in range(2)]
        if graphs[0] != graphs[1]:
            problems.append("kg differs")
        runs = [
            generateQuestions(graphs[0], [t for t in allTemplates() if t.hops == 2], 2, 20, 0.3, substream(seed, "q"))
            for _ in range(2)
        ]
        if [_itemKey(i) for i in runs[0]] != [_itemKey(i) for i in runs[1]]:
            problems.append("questions differ")

        first, second = _trainTrajectory(seed), _trainTrajectory(seed)
        if first != second:
            problems.append("training trajectories differ")
        if encodeCheckpoint(decodeCheckpoint(first)) != first:
            problems.append("checkpoint round-trip not bitwise exact")

        rng = substream(seed, "oracle.greedy")
        context = toyContext(randomGraph(rng, 12, 20), hops=2)
        params = toyParams(context, rng, scale=1.0)
        greedy = InferenceAgent(context, params, InferenceConfig(beam=1, hops=2))
        wide = InferenceAgent(context, params, InferenceConfig(beam=context.graph.numEntities, hops=2))
        disagreements = nonMonotone = 0
        for _ in range(questions):
            q = randomQuestion(rng, context.vocab)
            result = greedy.answer(q)
            top = topicDistribution(params.recognition, q, context).argmax()
            best = answerDistribution(params.reasoning, q, context.scopes.get(top)).argmax()
            disagreements += (result.topic, result.answer) != (top, best)
            nonMonotone += wide.answer(q).score < result.score - 1e-12
        if disagreements:
            problems.append(f"{disagreements} greedy/top-1 disagreements")
        if nonMonotone:
            problems.append(f"{nonMonotone} beam monotonicity violations")
        return not problems, "; ".join(problems) or f"identical reruns, exact round-trip, {questions} greedy probes"

    return _timed("determinism", check)


def runOracleSuite(seed: int = 0, names: Optional[List[str]] = None) -> List[OracleResult]:
    """Run every oracle (or the named subset) and log one line per result."""
    suite = {
        "elbo-bound": checkElboBound,
        "gradient-check": checkGradients,
        "score-identity": checkScoreIdentity,
        "reinforce-unbiased": checkReinforceUnbiased,
        "scope-oracle": checkScopes,
        "propagation-scaling": checkPropagationScaling,
        "scope-scaling": checkScopeScaling,
        "dataset-oracle": checkDataset,
        "determinism": checkDeterminism,
    }
    results = []
    for name, check in suite.items():
        if names and name not in names:
            continue
        result = check(seed)
        (logger.info if result.passed else logger.error)(result.line())
        results.append(result)
    return results
