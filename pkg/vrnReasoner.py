import argparse
import logging
from dataclasses import replace
from pathlib import Path
import sys
from typing import Dict, List, Optional, Tuple

sys.path.insert(0, str(Path(__file__).parent))

from config import Config, ConfigError
from utils import setupLogger, substream, writeCsv
from utils.checkpointIo import Checkpoint, CheckpointError, loadCheckpoint, saveCheckpoint
from knowledge import KnowledgeGraph, Vocabulary, buildVocab, computeScope, dumpEntityNames, dumpTriples, formatScope, loadGraph
from model import BaselineNet, ModelContext, VrnParams, initParams
from templates import templatesForHop
from datagen import (
    NameMatcher,
    QAItem,
    applyNoise,
    generateKg,
    generateQuestions,
    limitLabels,
    parseBrackets,
    qaFileName,
    readQaFile,
    splitDataset,
    typesFileName,
    writeQaFile,
    writeTypesFile,
)
from agents import AnswerResult, InferenceAgent, PretrainAgent, ReinforceAgent, SupervisedEmbeddingAgent
from evaluation import REPORT_FIELDS, appendMetrics, datasetRegime, datasetReport, entityAccuracy, hitsAt1, metricsRows
from evaluation.oracleChecks import OracleResult, runOracleSuite

COMMANDS = ["gen-data", "pretrain", "train", "eval", "infer", "inspect-scope", "oracle-check"]


class VrnOrchestrator:
    """Runs one subcommand of the pipeline against the files under outDir."""

    def __init__(self, config: Config = None):
        self.config = config or Config()
        self.logger = setupLogger(
            logLevel=self.config.logLevel,
            logFile=self.config.logFile
        )
        self.config.validate()
        self.outDir = Path(self.config.outDir)
        self._graph: Optional[KnowledgeGraph] = None
        self._vocab: Optional[Vocabulary] = None
        self._matcher: Optional[NameMatcher] = None

    # ------------------------------------------------------------ data files

    def genData(self) -> Dict[str, Path]:
        """Generate the knowledge graph and the 1-, 2- and 3-hop question sets."""
        cfg = self.config
        self.logger.info("=" * 60)
        self.logger.info(f"Generating synthetic data (seed {cfg.seed})")
        self.logger.info("=" * 60)

        graph = generateKg(replace(cfg.kg, seed=cfg.seed))
        matcher = NameMatcher(graph.entityNames)
        rng = substream(cfg.seed, "datagen")
        noiseRng = substream(cfg.seed, "noise")
        counts = (cfg.questions.trainCount, cfg.questions.validationCount, cfg.questions.testCount)
        ratios = [c / sum(counts) for c in counts]

        self.outDir.mkdir(parents=True, exist_ok=True)
        written: Dict[str, Path] = {}
        reportRows = []
        trainTokens: List[List[str]] = []
        for hops in (1, 2, 3):
            items = generateQuestions(
                graph, templatesForHop(hops), hops, sum(counts), 1.0, rng,
                maxAnswers=cfg.questions.maxAnswers, maxRetries=cfg.questions.maxRetries, matcher=matcher,
            )
            if cfg.noise.enabled:
                items = [applyNoise(item, cfg.noise, noiseRng) for item in items]
            split = splitDataset(items, ratios, rng)
            limitLabels(split.train, cfg.questions.labelFraction, rng)
            trainTokens += [item.tokens for item in split.train]
            for name, splitItems in split.items():
                written[qaFileName(name, hops)] = writeQaFile(self.outDir / qaFileName(name, hops), splitItems, graph)
                written[typesFileName(name, hops)] = writeTypesFile(self.outDir / typesFileName(name, hops), splitItems)
            reportRows += datasetReport(hops, split)

        with open(self.outDir / "kg.tsv", "w", encoding="utf-8") as f:
            dumpTriples(graph, f)
        with open(self.outDir / "entities.txt", "w", encoding="utf-8") as f:
            dumpEntityNames(graph, f)
        vocab = buildVocab(graph.entityTokens + trainTokens)
        vocab.save(self.outDir / "vocab.txt")
        written["dataset_report.csv"] = writeCsv(self.outDir / "dataset_report.csv", REPORT_FIELDS, reportRows)
        self.logger.info(f"Wrote graph ({graph.numEntities} entities, {graph.numTriples} triples) and {len(written)} files to {self.outDir}")
        return written

    @property
    def graph(self) -> KnowledgeGraph:
        if self._graph is None:
            with open(self.outDir / "entities.txt", encoding="utf-8") as names, \
                    open(self.outDir / "kg.tsv", encoding="utf-8") as triples:
                self._graph = loadGraph(triples, names, requireRegistered=True)
        return self._graph

    @property
    def vocab(self) -> Vocabulary:
        if self._vocab is None:
            self._vocab = Vocabulary.load(self.outDir / "vocab.txt")
        return self._vocab

    @property
    def matcher(self) -> NameMatcher:
        if self._matcher is None:
            self._matcher = NameMatcher(self.graph.entityNames)
        return self._matcher

    def readItems(self, split: str, hops: Optional[int] = None) -> List[QAItem]:
        hops = hops or self.config.hops
        return readQaFile(
            self.outDir / qaFileName(split, hops), self.graph, hops,
            typesPath=self.outDir / typesFileName(split, hops), matcher=self.matcher,
        )

    # ------------------------------------------------------------ training

    def pretrain(self) -> Path:
        """Supervised pretraining on the labeled training questions."""
        cfg = self.config
        self.logger.info(f"[PRETRAIN] {cfg.hops}-hop, T={cfg.train.hops}")
        context = ModelContext.build(self.graph, self.vocab, cfg.train.hops)
        labeled = [item for item in self.readItems("train") if item.isLabeled]
        params = initParams(cfg.model, self.graph, self.vocab, substream(cfg.seed, "init"))
        if labeled:
            PretrainAgent(context, params, cfg.train).run(labeled, substream(cfg.seed, "pretrain"))
        else:
            self.logger.warning("No topic-labeled training questions; keeping the initial parameters")
        return saveCheckpoint(
            self.outDir / "checkpoint_pretrain.bin", Checkpoint(params=params, numEntities=self.graph.numEntities)
        )

    def _startingParams(self) -> VrnParams:
        path = self.outDir / "checkpoint_pretrain.bin"
        if path.is_file():
            return self._loadParams(path)
        self.logger.warning(f"No pretrained checkpoint at {path}; pretraining first")
        self.pretrain()
        return self._loadParams(path)

    def _loadParams(self, path: Path) -> VrnParams:
        checkpoint = loadCheckpoint(path)
        if checkpoint.numEntities != self.graph.numEntities or checkpoint.params.vocabSize != len(self.vocab):
            raise CheckpointError(f"checkpoint {path} does not match the graph and vocabulary under {self.outDir}")
        return checkpoint.params

    def train(self) -> Path:
        """Joint variational training (REINFORCE with variance reduction)."""
        cfg = self.config
        params = self._startingParams()
        self.logger.info(f"[TRAIN] {cfg.hops}-hop, T={cfg.train.hops}, workers={cfg.workers}")
        context = ModelContext.build(self.graph, self.vocab, cfg.train.hops)
        baseline = BaselineNet(
            self.graph.numEntities, len(self.vocab), hidden=cfg.model.baselineHidden, rng=substream(cfg.seed, "baseline")
        )
        agent = ReinforceAgent(context, params, baseline, cfg.train, workers=cfg.workers)
        agent.run(self.readItems("train"), substream(cfg.seed, "sampling"), probeItems=self.readItems("validation"), outDir=self.outDir)
        return saveCheckpoint(self.outDir / "checkpoint_final.bin", agent.checkpoint())

    # ------------------------------------------------------------ evaluation

    def evaluate(self) -> Path:
        """hits@1 and entity accuracy of the trained, pretrained-only and baseline models."""
        cfg = self.config
        trainItems = self.readItems("train")
        regime = datasetRegime(trainItems)
        split = cfg.eval.split
        items = self.readItems(split)
        labeled = [item for item in items if item.isLabeled]
        inferenceConfig = replace(cfg.inference, useTopicLabels=cfg.inference.useTopicLabels or regime == "vanilla")
        context = ModelContext.build(self.graph, self.vocab, cfg.inference.hops)
        metricsPath = self.outDir / "metrics.csv"
        self.logger.info(f"[EVAL] {len(items)} {split} questions, {cfg.hops}-hop, regime {regime}")

        for model, fileName in (("vrn", "checkpoint_final.bin"), ("vrn_pretrain", "checkpoint_pretrain.bin")):
            path = self.outDir / fileName
            if not path.is_file():
                if model == "vrn":
                    raise FileNotFoundError(f"no trained checkpoint at {path}; run `train` first")
                continue
            params = self._loadParams(path)
            agent = InferenceAgent(context, params, inferenceConfig)
            metrics = hitsAt1(lambda item: agent.answer(agent.encode(item), item.topicEntity).answer, items)
            if labeled:
                metrics.entityAccuracy = entityAccuracy(params.recognition, labeled, context)
            self.logger.info(f"{model}: hits@1 {metrics.hitsAt1:.4f}, entity accuracy {metrics.entityAccuracy}")
            appendMetrics(metricsPath, metricsRows(cfg.dataset, regime, model, metrics))

        rng = substream(cfg.seed, "eval")
        baseline = SupervisedEmbeddingAgent(context, cfg.model, cfg.eval, rng)
        baseline.run(trainItems, rng)
        metrics = hitsAt1(lambda item: baseline.predict(baseline.encode(item)), items)
        self.logger.info(f"supervised_embedding: hits@1 {metrics.hitsAt1:.4f}")
        appendMetrics(metricsPath, metricsRows(cfg.dataset, regime, "supervised_embedding", metrics))
        return metricsPath

    # ------------------------------------------------------------ inspection

    def infer(self, question: str, entity: Optional[str] = None, explain: bool = False) -> Tuple[AnswerResult, str]:
        """
        Answer one question with the final checkpoint.

        Args:
            question: Question text; a [bracketed] mention is taken as the topic label
            entity: Topic entity name, overriding any bracketed mention
            explain: Append the highest-scoring reasoning path

        Returns:
            (AnswerResult, printable report)
        """
        graph = self.graph
        tokens, span = parseBrackets(question)
        topicLabel = None
        if entity is not None:
            topicLabel = graph.entityId(entity)
        elif span is not None:
            match = self.matcher.matchAt(tokens, span[0])
            topicLabel = graph.entityId(match[1]) if match and match[0] == span[1] else None

        params = self._loadParams(self.outDir / "checkpoint_final.bin")
        inferenceConfig = replace(self.config.inference, useTopicLabels=topicLabel is not None)
        agent = InferenceAgent(ModelContext.build(graph, self.vocab, self.config.inference.hops), params, inferenceConfig)
        q = agent.encode(QAItem(tokens=tokens, answers=(), hops=self.config.hops))
        result = agent.answer(q, topicLabel)

        names = graph.entityNames
        lines = [f"question: {' '.join(tokens)}", "topic\tlogP1\tbest_answer\tlogP2"]
        lines += [f"{names[r.topic]}\t{r.logP1:.4f}\t{names[r.bestAnswer]}\t{r.logP2:.4f}" for r in result.candidates]
        lines.append(f"answer: {names[result.answer]} (topic {names[result.topic]}, score {result.score:.4f})")
        if explain:
            path = agent.inspectPath(q, result.topic, result.answer)
            lines.append(f"path: {path.format(graph)}")
        return result, "\n".join(lines)

    def inspectScope(self, entity: str) -> str:
        graph = self.graph
        return formatScope(computeScope(graph, graph.entityId(entity), self.config.inference.hops), graph)

    def oracleCheck(self) -> List[OracleResult]:
        self.logger.info("[ORACLE] running every oracle suite")
        return runOracleSuite(self.config.seed)


def buildConfig(args: argparse.Namespace) -> Config:
    """Config file first, then `--set` pairs, then dedicated flags (flags win)."""
    config = Config.fromFile(args.config) if args.config else Config()
    values: Dict[str, object] = {}
    for pair in args.set or []:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"expected KEY=VALUE, got {pair!r}")
        values[key.strip()] = value.strip()
    if args.seed is not None:
        values["seed"] = args.seed
    if args.hops is not None:
        values.update({"hops": args.hops, "train.hops": args.hops, "inference.hops": args.hops})
    if args.label_fraction is not None:
        values["questions.labelFraction"] = args.label_fraction
    if args.beam is not None:
        values["inference.beam"] = args.beam
    if args.workers is not None:
        values["workers"] = args.workers
    if args.out is not None:
        values["outDir"] = args.out
    config.applyValues(values)
    return config


def _reportError(error: Exception) -> None:
    message = " ".join(str(error).split()).replace('"', '\\"')
    print(f'error type={type(error).__name__} message="{message}"', file=sys.stderr)


class VrnArgumentParser(argparse.ArgumentParser):
    """Usage errors surface as ConfigError instead of printing usage and exiting."""

    def error(self, message: str):
        raise ConfigError(message)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    parser = VrnArgumentParser(description="Variational reasoning network for knowledge-graph question answering")
    parser.add_argument("command", choices=COMMANDS, help="Pipeline step to run")
    parser.add_argument("--config", help="dotenv-format config file with section.field=value keys")
    parser.add_argument("--seed", type=int, help="Root seed")
    parser.add_argument("--hops", type=int, choices=[1, 2, 3], help="Question hop count and propagation depth T")
    parser.add_argument("--label-fraction", type=float, help="Fraction of training questions keeping topic labels")
    parser.add_argument("--beam", type=int, help="Beam width k for inference")
    parser.add_argument("--workers", type=int, help="Sampling worker threads")
    parser.add_argument("--explain", action="store_true", help="Print the reasoning path (infer)")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--question", help="Question text (infer)")
    parser.add_argument("--entity", help="Topic entity name (infer, inspect-scope)")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="Extra config override, repeatable")

    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        _reportError(e)
        return 2

    try:
        orchestrator = VrnOrchestrator(buildConfig(args))

        if args.command == "gen-data":
            orchestrator.genData()
        elif args.command == "pretrain":
            orchestrator.pretrain()
        elif args.command == "train":
            orchestrator.train()
        elif args.command == "eval":
            print(f"Metrics appended to {orchestrator.evaluate()}")
        elif args.command == "infer":
            if not args.question:
                raise ConfigError("infer needs --question")
            _, report = orchestrator.infer(args.question, args.entity, args.explain)
            print(report)
        elif args.command == "inspect-scope":
            if not args.entity:
                raise ConfigError("inspect-scope needs --entity")
            print(orchestrator.inspectScope(args.entity), end="")
        elif args.command == "oracle-check":
            results = orchestrator.oracleCheck()
            for result in results:
                print(result.line())
            if not all(result.passed for result in results):
                return 1
        return 0

    except KeyboardInterrupt:
        print("\nShutting down...")
        return 1
    except ConfigError as e:
        _reportError(e)
        return 2
    except Exception as e:
        logging.getLogger(__name__).error(f"{args.command} failed: {e}", exc_info=True)
        _reportError(e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
