"""Deterministic synthetic corpus for exercising the full pipeline.

The generator builds a small web-like document collection plus claim-citation
instances with known structure: every ordinary claim cites a document whose
text paraphrases the claim (shared rare tokens and a verbatim quoted span,
but not the claim's verb), flanked by hard distractors that repeat the
claim's entity and verb without the supporting details.  Failed citations
point at shallow, generic homepage documents that support nothing.

Everything is a pure function of the seed, so a regenerated corpus is
byte-identical run to run.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import CitationInstance, Document, write_jsonl

_SYLLABLES = (
    "ba be bi bo bu da de do fa fe fi fo ga ge gi go ka ke ki ko la le li lo "
    "ma me mi mo na ne ni no pa pe pi po ra re ri ro sa se si so ta te ti to "
    "va ve vi vo za zo lu ru mu nu du tu"
).split()

_COMMON = (
    "the of and a in to for during after before with from on at by over under "
    "new local annual public major regional council committee report plan group "
    "work team project review support record history member early late period "
    "result growth study release statement official series event season"
).split()

_VERBS = {
    "announced": "made public",
    "launched": "set in motion",
    "completed": "brought to completion",
    "won": "claimed",
    "opened": "inaugurated",
    "published": "released",
    "acquired": "purchased",
    "established": "founded",
    "unveiled": "presented",
    "secured": "obtained",
}

_OBJECTS = (
    "expansion festival merger museum stadium archive initiative observatory "
    "railway campaign reserve laboratory"
).split()

_BOILERPLATE = (
    "Your daily source of news weather sport and business from our newsroom. "
    "Subscribe to the newsletter for updates in the morning and at the weekend. "
    "Sign in at the member portal to manage the account. Contact the team "
    "through the form below. About this site. Careers and press enquiries. "
    "Terms of service and privacy policy apply to all visitors in every region."
)


@dataclass
class SyntheticData:
    documents: list[Document]
    instances: list[CitationInstance]
    seed: int


def _word(rng: random.Random, used: set[str], n_syllables: int = 3) -> str:
    while True:
        w = "".join(rng.choice(_SYLLABLES) for _ in range(n_syllables))
        if w not in used and w not in _COMMON:
            used.add(w)
            return w


def _filler_sentence(rng: random.Random, topic_words: list[str], avoid: set[str]) -> str:
    words = []
    for _ in range(rng.randint(9, 14)):
        pool = topic_words if rng.random() < 0.35 else _COMMON
        choice = rng.choice(pool)
        if choice in avoid:
            choice = rng.choice(_COMMON)
        words.append(choice)
    return " ".join(words).capitalize() + "."


def _generic_intro(rng: random.Random, topic_name: str, topic_words: list[str], avoid: set[str]) -> str:
    safe = [w for w in topic_words if w not in avoid]
    w1 = rng.choice(safe)
    w2 = rng.choice(safe)
    return (
        f"The {w1} programme of the {topic_name} season drew a long review "
        f"from the regional committee and the {w2} working group."
    )


def generate_corpus(
    seed: int = 7,
    n_claims: int = 120,
    n_failed: int = 20,
    n_topics: int = 12,
    n_topic_distractors: int = 120,
) -> SyntheticData:
    """Build documents and instances with the structure described above."""
    rng = random.Random(seed)
    used: set[str] = set()

    topics = []
    for _ in range(n_topics):
        name = _word(rng, used)
        vocab = [_word(rng, used) for _ in range(14)]
        places = [_word(rng, used).capitalize() for _ in range(3)]
        topics.append({"name": name, "vocab": vocab, "places": places, "entities": []})

    documents: list[Document] = []
    instances: list[CitationInstance] = []
    verbs = sorted(_VERBS)

    current_article = None
    n_featured = 0
    for i in range(n_claims):
        topic = topics[i % n_topics]
        if current_article is None or rng.random() >= 0.3 or current_article["topic"] is not topic:
            e1 = _word(rng, used).capitalize()
            e2 = _word(rng, used).capitalize()
            current_article = {"topic": topic, "e1": e1, "e2": e2, "title": f"{e1} {e2}"}
            topic["entities"].append((e1, e2))
        e1, e2 = current_article["e1"], current_article["e2"]

        year = rng.randint(1995, 2005)
        place = rng.choice(topic["places"])
        obj = rng.choice(_OBJECTS)
        verb = rng.choice(verbs)
        tw = rng.choice(topic["vocab"])
        claim = f"{e1} {e2} {verb} the {tw} {obj} at {place} in {year}."
        claim_tokens = {t.lower() for t in claim.replace(".", "").split()}

        featured = rng.random() < 0.55
        early_evidence = rng.random() < 0.4

        # Gold document: a paraphrase that keeps a verbatim quoted span and the
        # rare details (year, place, object) but drops the first name and verb.
        syn = _VERBS[verb]
        gold_segment = (
            f"The {tw} {obj} at {place} was {syn} in {year} by the long serving {e2}. "
            f"Records kept at {place} confirm the {obj} was {syn} during {year}."
        )
        if rng.random() < 0.65:
            intro = (
                f"{e1} {e2} remained a central figure of the {topic['name']} scene "
                f"for a long period."
            )
        else:
            intro = _generic_intro(rng, topic["name"], topic["vocab"], claim_tokens)

        target = rng.randint(30, 160) if early_evidence else rng.randint(330, 420)
        total = rng.randint(460, 560)
        body: list[str] = [intro]
        count = len(intro.split())
        while count < target:
            s = _filler_sentence(rng, topic["vocab"], claim_tokens)
            body.append(s)
            count += len(s.split())
        body.append(gold_segment)
        count += len(gold_segment.split())
        while count < total:
            s = _filler_sentence(rng, topic["vocab"], claim_tokens)
            body.append(s)
            count += len(s.split())

        slug = f"{e1.lower()}-{e2.lower()}-{obj}-{i}"
        if featured and n_featured % 4 == 2:
            gold_url = f"https://{e1.lower()}-{e2.lower()}-{i}.example.com/"
        elif featured and n_featured % 4 == 0:
            gold_url = f"https://{topic['name']}press.example.com/{slug}"
        else:
            month, day = rng.randint(1, 12), rng.randint(1, 28)
            depth_extra = rng.random() < 0.4
            gold_url = f"https://{topic['name']}gazette.example.com/{year}/{month:02d}/" + (
                f"{day:02d}/{slug}" if depth_extra else slug
            )
        if featured:
            n_featured += 1
        gold_title = f"{e1} {e2} and the {obj} at {place}"
        documents.append(Document(url=gold_url, title=gold_title, text=" ".join(body)))

        # Two hard distractors: right entity and verb, wrong details, short.
        for j in range(2):
            tw2 = rng.choice([w for w in topic["vocab"] if w != tw])
            obj2 = rng.choice([o for o in _OBJECTS if o != obj])
            place2 = rng.choice([p for p in topic["places"] if p != place] or topic["places"])
            year2 = year - rng.randint(2, 6)
            verb2 = rng.choice(verbs)
            d_body = [
                f"{e1} {e2} {verb} the {tw2} {obj2} at {place2} in {year2}.",
                f"In a statement {e1} {e2} discussed the {tw2} season and the {obj2} review.",
                f"{e1} {e2} later {verb2} a {obj2} plan during {year2}.",
            ]
            d_total = rng.randint(130, 220)
            d_count = sum(len(s.split()) for s in d_body)
            while d_count < d_total:
                s = _filler_sentence(rng, topic["vocab"], claim_tokens)
                d_body.append(s)
                d_count += len(s.split())
            d_url = f"https://{topic['name']}post.example.com/{year2}/{slug}-note-{j}"
            documents.append(
                Document(
                    url=d_url,
                    title=f"{e1} {e2} on the {obj2} review",
                    text=" ".join(d_body),
                )
            )

        pre1 = _filler_sentence(rng, topic["vocab"], set())
        pre2 = _filler_sentence(rng, topic["vocab"], set())
        post = _filler_sentence(rng, topic["vocab"], set())
        context = f"{pre1} {pre2} {claim}[CIT] {post}"
        instances.append(
            CitationInstance(
                instance_id=f"inst-{i:04d}",
                article_title=current_article["title"],
                section_path=f"{topic['name'].capitalize()} events",
                context_with_marker=context,
                cited_url=gold_url,
                cited_title=gold_title,
                featured=featured,
                failed_verification=False,
            )
        )

    # Topic distractors: plenty of topic vocabulary, passing entity mentions,
    # no supporting details for any claim.
    for i in range(n_topic_distractors):
        topic = topics[i % n_topics]
        body = []
        for _ in range(rng.randint(12, 22)):
            body.append(_filler_sentence(rng, topic["vocab"], set()))
        if topic["entities"] and rng.random() < 0.6:
            e1, e2 = rng.choice(topic["entities"])
            body.insert(
                rng.randrange(len(body)),
                f"The season review briefly mentioned {e1} {e2} among others.",
            )
        url = f"https://{topic['name']}wire.example.com/{2006 + i % 9}/digest-{i}"
        documents.append(
            Document(url=url, title=f"{topic['name'].capitalize()} digest {i}", text=" ".join(body))
        )

    # Failed citations: claims with no evidence anywhere, citing shallow
    # generic homepages.
    for i in range(n_failed):
        topic = topics[i % n_topics]
        e1 = _word(rng, used).capitalize()
        e2 = _word(rng, used).capitalize()
        year = rng.randint(1995, 2005)
        place = rng.choice(topic["places"])
        obj = rng.choice(_OBJECTS)
        verb = rng.choice(verbs)
        tw = rng.choice(topic["vocab"])
        claim = f"{e1} {e2} {verb} the {tw} {obj} at {place} in {year}."
        brand = _word(rng, used)
        if i % 5 == 4:
            home_url = f"https://{brand}.example.com/news/index"
        else:
            home_url = f"https://{brand}.example.com/news"
        home_text = f"Welcome to the {brand} network. {_BOILERPLATE} All rights reserved {brand}."
        documents.append(
            Document(url=home_url, title=f"{brand.capitalize()} news", text=home_text)
        )
        pre = _filler_sentence(rng, topic["vocab"], set())
        post = _filler_sentence(rng, topic["vocab"], set())
        instances.append(
            CitationInstance(
                instance_id=f"fail-{i:04d}",
                article_title=f"{e1} {e2}",
                section_path=f"{topic['name'].capitalize()} events",
                context_with_marker=f"{pre} {claim}[CIT] {post}",
                cited_url=home_url,
                cited_title=f"{brand.capitalize()} news",
                featured=False,
                failed_verification=True,
            )
        )

    return SyntheticData(documents=documents, instances=instances, seed=seed)


def write_dataset(out_dir: str | Path, data: SyntheticData) -> tuple[Path, Path]:
    """Write documents.jsonl and instances.jsonl into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc_path = out / "documents.jsonl"
    inst_path = out / "instances.jsonl"
    write_jsonl(doc_path, data.documents)
    write_jsonl(inst_path, data.instances)
    return doc_path, inst_path
