"""
Input preparation: fit an evidence path into a downstream token budget
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from models.corpus import Document, Passage
from models.errors import UnknownPassageError
from models.evidence import ContextMention, EvidencePath, PreparedContext
from services.corpus_store import CorpusHandle

logger = logging.getLogger(__name__)

DEFAULT_MAX_INPUT_LENGTH = 512

PRECEDING = "preceding"
SUCCEEDING = "succeeding"


@dataclass
class _Sentence:
    passage_id: str
    sentence_idx: int
    tokens: List[str]
    mentions: List[Tuple[str, int, int]]
    path_pos: int
    protected: bool = False

    @property
    def mention_count(self) -> int:
        return len(self.mentions)


@dataclass
class _Block:
    """One path passage with the document sentences added around it"""
    passage: Passage
    path_pos: int
    sentences: List[_Sentence]
    preceding: List[_Sentence] = field(default_factory=list)
    succeeding: List[_Sentence] = field(default_factory=list)
    cursor_back: Optional[Tuple[int, int]] = None
    cursor_forward: Optional[Tuple[int, int]] = None
    next_side: str = PRECEDING


def _sentence(passage: Passage, sentence_idx: int, path_pos: int,
              protect: Set[str]) -> _Sentence:
    mentions = [(m.entity_id, m.start, m.end) for m in passage.mentions_in_sentence(sentence_idx)]
    return _Sentence(
        passage_id=passage.id,
        sentence_idx=sentence_idx,
        tokens=list(passage.sentences[sentence_idx]),
        mentions=mentions,
        path_pos=path_pos,
        protected=any(entity_id in protect for entity_id, _, _ in mentions)
    )


def prepare_input(path: EvidencePath, corpus: CorpusHandle, max_length: int,
                  head: str, tail: str) -> PreparedContext:
    """Drop or add sentences until the path's token count fits max_length.

    Over budget: repeatedly drop the sentence with the fewest mentions among
    those without a head or tail mention (ties: the latest sentence of the
    latest passage), then truncate trailing tokens if that is not enough.
    Under budget: add neighbouring document sentences round-robin across the
    path passages, alternating preceding and succeeding, until the budget is
    met or every document boundary is reached.
    """
    if max_length < 1:
        raise ValueError(f"max_length must be >= 1, got {max_length}")

    protect = {head, tail}
    blocks = []
    for pos, passage_id in enumerate(path.passages):
        try:
            passage = corpus.passage(passage_id)
        except UnknownPassageError:
            raise UnknownPassageError(f"path passage '{passage_id}' is not in the corpus")
        blocks.append(_Block(
            passage=passage,
            path_pos=pos,
            sentences=[_sentence(passage, s, pos, protect) for s in range(len(passage.sentences))]
        ))

    ctx = PreparedContext(path=list(path.passages), budget=max_length)
    total = sum(len(s.tokens) for block in blocks for s in block.sentences)

    if total > max_length:
        total = _drop_sentences(blocks, total, max_length, ctx)
        if total > max_length:
            _truncate_tail(blocks, total - max_length)
            ctx.truncated = True
            logger.warning(f"Path {path.passages} truncated to {max_length} tokens after dropping "
                           f"every unprotected sentence")
    elif total < max_length:
        _augment(blocks, corpus, total, max_length, ctx)

    _assemble(blocks, ctx)
    return ctx


def _drop_sentences(blocks: List[_Block], total: int, max_length: int, ctx: PreparedContext) -> int:
    while total > max_length:
        candidates = [s for block in blocks for s in block.sentences if not s.protected]
        if not candidates:
            break
        victim = min(candidates, key=lambda s: (s.mention_count, -s.path_pos, -s.sentence_idx))
        blocks[victim.path_pos].sentences.remove(victim)
        ctx.dropped_sentences.append((victim.passage_id, victim.sentence_idx))
        total -= len(victim.tokens)
    return total


def _truncate_tail(blocks: List[_Block], excess: int) -> None:
    """Remove excess tokens from the end of the context"""
    for block in reversed(blocks):
        while excess > 0 and block.sentences:
            last = block.sentences[-1]
            keep = max(len(last.tokens) - excess, 0)
            excess -= len(last.tokens) - keep
            if keep == 0:
                block.sentences.pop()
            else:
                last.tokens = last.tokens[:keep]
                last.mentions = [(e, s, t) for e, s, t in last.mentions if t <= keep]
        if excess <= 0:
            break


def _step_back(document: Document, cursor: Tuple[int, int]) -> Optional[Tuple[int, int]]:
    p_idx, s_idx = cursor
    if s_idx > 0:
        return (p_idx, s_idx - 1)
    while p_idx > 0:
        p_idx -= 1
        if document.passages[p_idx].sentences:
            return (p_idx, len(document.passages[p_idx].sentences) - 1)
    return None


def _step_forward(document: Document, cursor: Tuple[int, int]) -> Optional[Tuple[int, int]]:
    p_idx, s_idx = cursor
    if s_idx + 1 < len(document.passages[p_idx].sentences):
        return (p_idx, s_idx + 1)
    while p_idx + 1 < len(document.passages):
        p_idx += 1
        if document.passages[p_idx].sentences:
            return (p_idx, 0)
    return None


def _augment(blocks: List[_Block], corpus: CorpusHandle, total: int, max_length: int,
             ctx: PreparedContext) -> int:
    """Round-robin over path passages, one sentence at a time, alternating sides"""
    used = {(s.passage_id, s.sentence_idx) for block in blocks for s in block.sentences}
    documents: Dict[int, Document] = {}
    exhausted = {}

    for block in blocks:
        documents[block.path_pos] = corpus.document(block.passage.doc_id)
        idx = block.passage.index_in_doc
        last = max(len(block.passage.sentences) - 1, 0)
        block.cursor_back = (idx, 0)
        block.cursor_forward = (idx, last)
        exhausted[(block.path_pos, PRECEDING)] = False
        exhausted[(block.path_pos, SUCCEEDING)] = False

    while total < max_length:
        progress = False
        for block in blocks:
            if total >= max_length:
                break
            sides = [block.next_side, SUCCEEDING if block.next_side == PRECEDING else PRECEDING]
            for side in sides:
                if exhausted[(block.path_pos, side)]:
                    continue
                document = documents[block.path_pos]
                cursor = block.cursor_back if side == PRECEDING else block.cursor_forward
                target = _step_back(document, cursor) if side == PRECEDING else _step_forward(document, cursor)
                if target is None:
                    exhausted[(block.path_pos, side)] = True
                    continue
                passage = document.passages[target[0]]
                if (passage.id, target[1]) in used:
                    exhausted[(block.path_pos, side)] = True
                    continue

                sentence = _sentence(passage, target[1], block.path_pos, set())
                room = max_length - total
                if len(sentence.tokens) > room:
                    _clip(sentence, room, keep_end=(side == PRECEDING))
                used.add((passage.id, target[1]))
                if side == PRECEDING:
                    block.cursor_back = target
                    block.preceding.insert(0, sentence)
                else:
                    block.cursor_forward = target
                    block.succeeding.append(sentence)
                total += len(sentence.tokens)
                ctx.augmented_spans.append((passage.id, target[1], len(sentence.tokens)))
                block.next_side = SUCCEEDING if side == PRECEDING else PRECEDING
                progress = True
                break
        if not progress:
            break
    return total


def _clip(sentence: _Sentence, room: int, keep_end: bool) -> None:
    """Shorten an added sentence to room tokens, keeping the side nearest the path passage"""
    length = len(sentence.tokens)
    if keep_end:
        offset = length - room
        sentence.tokens = sentence.tokens[offset:]
        sentence.mentions = [(e, s - offset, t - offset) for e, s, t in sentence.mentions if s >= offset]
    else:
        sentence.tokens = sentence.tokens[:room]
        sentence.mentions = [(e, s, t) for e, s, t in sentence.mentions if t <= room]


def _assemble(blocks: List[_Block], ctx: PreparedContext) -> None:
    for block in blocks:
        for sentence in block.preceding + block.sentences + block.succeeding:
            offset = len(ctx.tokens)
            ctx.tokens.extend(sentence.tokens)
            ctx.source_map.extend((sentence.passage_id, sentence.sentence_idx) for _ in sentence.tokens)
            ctx.mentions.extend(ContextMention(entity_id=e, start=offset + s, end=offset + t)
                                for e, s, t in sentence.mentions)


def validate_context(ctx: PreparedContext, head: str, tail: str) -> bool:
    """True iff the context still mentions head and tail and fits its budget"""
    entities = ctx.entity_ids()
    return head in entities and tail in entities and ctx.length <= ctx.budget


def bridge_coverage(ctx: PreparedContext, bridges: List[str]) -> Dict[str, bool]:
    """Whether each bridge entity still has a mention in the prepared context"""
    entities = ctx.entity_ids()
    return {bridge: bridge in entities for bridge in bridges}
