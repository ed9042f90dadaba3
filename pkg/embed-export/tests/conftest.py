"""Shared fixtures: a tiny locally-built encoder, plus the acceptance
checklist hooks."""

from __future__ import annotations

import pytest

from helpers_export import VOCAB


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> str:
    """A saved 2-layer encoder (hidden size 32) with a 22-piece vocabulary."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizerFast
    from transformers.utils import logging as hf_logging

    hf_logging.disable_progress_bar()
    directory = tmp_path_factory.mktemp("tiny-encoder")
    try:
        tokenizer = BertTokenizerFast(
            vocab={word: i for i, word in enumerate(VOCAB)},
            do_lower_case=True)
    except TypeError:  # older releases take a vocab file path instead
        vocab_file = directory / "vocab.txt"
        vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
        tokenizer = BertTokenizerFast(vocab_file=str(vocab_file),
                                      do_lower_case=True)
    config = BertConfig(vocab_size=len(VOCAB), hidden_size=32,
                        num_hidden_layers=2, num_attention_heads=2,
                        intermediate_size=64, max_position_embeddings=64)
    torch.manual_seed(0)
    model = BertModel(config)
    model.eval()
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return str(directory)


_criterion_results: list[str] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    name = getattr(item.function, "_criterion_name", None)
    if name is None or report.when != "call":
        return
    verdict = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
    detail = ""
    if report.outcome == "skipped":  # longrepr is (path, lineno, reason)
        detail = f" ({str(report.longrepr[2]).removeprefix('Skipped: ')})"
    _criterion_results.append(f"ACCEPTANCE {verdict}: {name}{detail}")


def pytest_terminal_summary(terminalreporter):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for line in _criterion_results:
        terminalreporter.write_line(line)
