import pytest

import synth
from bibclass.bayes import build_model
from bibclass.corpus import load_citations, load_memberships, load_records
from bibclass.textpipe import default_tokenizer_config


@pytest.fixture(scope="session")
def bench(tmp_path_factory):
    """The deterministic benchmark corpus, written once per session."""
    return synth.build_benchmark(tmp_path_factory.mktemp("benchmark"))


@pytest.fixture(scope="session")
def bench_train(bench):
    return load_records(bench["paths"]["train"])


@pytest.fixture(scope="session")
def bench_test(bench):
    return load_records(bench["paths"]["test"])


@pytest.fixture(scope="session")
def bench_model(bench_train):
    return build_model(bench_train.records, synth.DATABASES, default_tokenizer_config())


@pytest.fixture(scope="session")
def bench_graph(bench, bench_test):
    memberships = load_memberships(bench["paths"]["memberships"])
    known = set(memberships) | set(bench_test.ids())
    graph, _ = load_citations(
        bench["paths"]["citations"], known, memberships, synth.DATABASES
    )
    return graph
