"""Hypothesis property tests for the pure helpers."""

from hypothesis import given, settings
from hypothesis import strategies as st

from citecheck.corpus import Document, chunk_document
from citecheck.evaluation import bucket_by_score, majority_vote, sign_test, url_depth
from citecheck.fusion import merge
from citecheck.sparse import tokenize

words = st.lists(st.from_regex(r"[a-z0-9]{1,6}", fullmatch=True), min_size=0, max_size=120)


@given(st.text(max_size=200))
def test_tokenize_output_is_fixed_point(text):
    tokens = tokenize(text)
    assert tokenize(" ".join(tokens)) == tokens
    assert all(t == t.lower() and t.isascii() and t.isalnum() for t in tokens)


@given(words, st.integers(1, 30), st.integers(1, 30))
def test_chunking_covers_every_word(word_list, window, stride_raw):
    stride = min(stride_raw, window)
    doc = Document(url="https://example.com/p", title="", text=" ".join(word_list))
    passages = chunk_document(doc, window, stride)
    covered = set()
    for p in passages:
        assert p.text == " ".join(doc.words()[p.word_start : p.word_end])
        assert p.word_end - p.word_start <= window
        covered.update(range(p.word_start, p.word_end))
    assert covered == set(range(len(doc.words())))


@given(st.integers(0, 5), st.lists(st.from_regex(r"[a-z0-9-]{1,8}", fullmatch=True), max_size=5))
def test_url_depth_counts_segments(extra, segments):
    url = "https://host.example.com/" + "/".join(segments)
    depth = url_depth(url)
    assert depth == len([s for s in segments if s])
    assert url_depth(url + "?" + "a=1&" * extra + "z=2#frag") == depth


@given(st.lists(st.sampled_from(["A", "B", "none"]), min_size=1, max_size=25))
def test_majority_vote_winner_when_unique_max(labels):
    winner = majority_vote(labels)
    counts = {label: labels.count(label) for label in set(labels)}
    top = max(counts.values())
    leaders = [label for label, c in counts.items() if c == top]
    if len(leaders) == 1:
        assert winner == leaders[0]
    else:
        assert winner is None


@given(st.integers(0, 18), st.integers(0, 18))
@settings(max_examples=60)
def test_sign_test_symmetry_and_bounds(a, b):
    if a + b == 0:
        return
    one_ab, two_ab = sign_test(a, b)
    one_ba, two_ba = sign_test(b, a)
    assert (one_ab, two_ab) == (one_ba, two_ba)
    assert 0 < one_ab <= 1
    assert one_ab <= two_ab <= 1


@given(
    st.lists(st.tuples(st.integers(0, 99), st.floats(-50, 50)), max_size=40),
    st.lists(st.floats(-10, 10), min_size=1, max_size=5, unique=True).map(sorted),
)
def test_buckets_partition_items(items, edges):
    items = [(f"i{n}-{i}", s) for i, (n, s) in enumerate(items)]
    buckets = bucket_by_score(items, edges)
    assert len(buckets) == len(edges) + 1
    flattened = [item for bucket in buckets for item in bucket]
    assert sorted(flattened) == sorted(items)


@given(
    st.lists(st.integers(0, 60), unique=True, max_size=30),
    st.lists(st.integers(0, 60), unique=True, max_size=30),
)
def test_merge_union_once_each(sparse_ids, dense_ids):
    sparse = [(f"https://m.example.com/{i}#p0", 1.0) for i in sparse_ids]
    dense = [(f"https://m.example.com/{i}#p0", 1.0) for i in dense_ids]
    merged = merge(sparse, dense, lambda pid: pid.rsplit("#", 1)[0])
    ids = [c.passage_id for c in merged]
    assert len(ids) == len(set(ids))
    assert set(ids) == {pid for pid, _ in sparse} | {pid for pid, _ in dense}
