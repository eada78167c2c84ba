"""
Evidence retrieval engine - command-line entry point
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from commands.reporting import cmd_evaluate, cmd_export_training
from commands.retrieval import cmd_analyze_mining, cmd_dump_graph, cmd_ingest, cmd_retrieve
from config import LOG_FORMAT, LOG_LEVEL
from models.errors import ConfigError
from models.pipeline_config import PipelineConfig

logger = logging.getLogger(__name__)

# (flag, config field, type)
CONFIG_FLAGS = [
    ('--store-dir', 'store_dir', str),
    ('--output-dir', 'output_dir', str),
    ('--max-hops', 'max_hops', int),
    ('--top-k', 'top_k', int),
    ('--max-input-length', 'max_input_length', int),
    ('--doc-cap', 'doc_cap', int),
    ('--scorer', 'scorer', str),
    ('--bm25-k1', 'bm25_k1', float),
    ('--bm25-b', 'bm25_b', float),
    ('--embedding-file', 'embedding_file', str),
    ('--embedding-endpoint', 'embedding_endpoint', str),
    ('--embedding-passage-endpoint', 'embedding_passage_endpoint', str),
    ('--embedding-timeout', 'embedding_timeout', float),
    ('--embedding-retries', 'embedding_retries', int),
    ('--embedding-backoff', 'embedding_backoff', float),
    ('--embedding-batch-size', 'embedding_batch_size', int),
    ('--bucket-boundary', 'bucket_boundary', int),
    ('--bucket-semantics', 'bucket_semantics', str),
    ('--seed', 'seed', int),
    ('--workers', 'workers', int),
]


def build_parser() -> argparse.ArgumentParser:
    """Subcommands share one parent parser carrying every configuration flag"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="JSON configuration file")
    common.add_argument('--log-level', default=None, help=f"logging level (default {LOG_LEVEL})")
    for flag, dest, kind in CONFIG_FLAGS:
        common.add_argument(flag, dest=dest, type=kind, default=None)
    common.add_argument('--strict-entities', dest='strict_entities', action='store_const', const=True,
                        default=None, help="reject mentions of entities missing from the vocabulary")
    common.add_argument('--hop-values', dest='hop_values', type=int, nargs='+', default=None,
                        help="hop limits for analyze-mining")

    parser = argparse.ArgumentParser(prog='evidence', description="Multi-hop evidence retrieval engine")
    sub = parser.add_subparsers(dest='command', required=True)

    ingest = sub.add_parser('ingest', parents=[common], help="ingest corpus JSONL into the store")
    ingest.add_argument('corpus', nargs='+', help="corpus JSONL files")
    ingest.add_argument('--entities', help="entity vocabulary JSONL")
    ingest.add_argument('--force', action='store_true', help="overwrite an existing store")

    retrieve = sub.add_parser('retrieve', parents=[common], help="mine, rank and prepare evidence paths")
    retrieve.add_argument('pairs', help="JSONL of {\"head\", \"tail\"} pairs")

    evaluate = sub.add_parser('evaluate', parents=[common], help="path and passage recall against gold")
    evaluate.add_argument('retrieved', help="output directory of a retrieve run")
    evaluate.add_argument('gold', help="gold evidence JSONL")
    evaluate.add_argument('--report', help="report JSON path (default <retrieved>/report.json)")

    export = sub.add_parser('export-training', parents=[common], help="export augmented training samples")
    export.add_argument('gold', help="gold evidence JSONL")
    export.add_argument('--output', required=True, help="training JSONL to write")

    dump = sub.add_parser('dump-graph', parents=[common], help="print the passage graph edge list")
    dump.add_argument('head')
    dump.add_argument('tail')
    dump.add_argument('--output', help="write the edge list to a file instead of stdout")

    analyze = sub.add_parser('analyze-mining', parents=[common], help="mining recall and cost per hop limit")
    analyze.add_argument('gold', help="gold evidence JSONL")

    return parser


def config_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    names = [dest for _, dest, _ in CONFIG_FLAGS] + ['strict_entities', 'hop_values']
    return {name: getattr(args, name) for name in names if getattr(args, name) is not None}


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns the process exit status"""
    args = build_parser().parse_args(argv)

    logging.basicConfig(level=(args.log_level or LOG_LEVEL).upper(), format=LOG_FORMAT, stream=sys.stderr)

    try:
        config = PipelineConfig.from_sources(args.config, config_overrides(args))
    except ConfigError as e:
        for error in e.errors:
            logger.error(f"Config: {error}")
        return 2

    if args.command == 'ingest':
        return cmd_ingest(config, args.corpus, args.entities, args.force)
    if args.command == 'retrieve':
        return cmd_retrieve(config, args.pairs)
    if args.command == 'evaluate':
        return cmd_evaluate(config, args.retrieved, args.gold, args.report)
    if args.command == 'export-training':
        return cmd_export_training(config, args.gold, args.output)
    if args.command == 'dump-graph':
        return cmd_dump_graph(config, args.head, args.tail, args.output)
    return cmd_analyze_mining(config, args.gold)


if __name__ == '__main__':
    sys.exit(main())
