#!/usr/bin/env python3
"""Writes the offline demo fixture: a small composer knowledge graph, encyclopedia
articles with links, recorded provider responses and scripted annotations.

Usage: make_demo_fixture.py [output_dir]    (default: data/demo next to the repo root)
"""

import json
import random
import sys
import urllib.parse
from pathlib import Path

WINDOW, STEP = 120, 60

# key -> (label, kind); ids are assigned in this order
ENTITIES = [
    ("human", "human", "class"), ("city", "city", "class"), ("town", "town", "class"),
    ("country", "country", "class"), ("river", "river", "class"), ("continent_eu", "Europe", "continent"),
    ("composer", "composer", "occupation"), ("pianist", "pianist", "occupation"),
    ("organist", "organist", "occupation"), ("conductor", "conductor", "occupation"),
    ("male", "male", "class"), ("symphony", "symphony", "genre"), ("opera", "opera", "genre"),
    ("oratorio", "oratorio", "genre"), ("concerto", "concerto", "genre"), ("ballet", "ballet", "genre"),
    ("chamber", "chamber music", "genre"), ("piano_music", "piano music", "genre"),
    ("german", "German", "language"), ("french", "French", "language"), ("italian", "Italian", "language"),
    ("english", "English", "language"), ("polish", "Polish", "language"), ("russian", "Russian", "language"),
    ("czech", "Czech", "language"), ("hungarian", "Hungarian", "language"),
    ("germany", "Germany", "country"), ("austria", "Austria", "country"), ("poland", "Poland", "country"),
    ("italy", "Italy", "country"), ("france", "France", "country"), ("uk", "United Kingdom", "country"),
    ("russia", "Russia", "country"), ("czechia", "Czech Republic", "country"), ("hungary", "Hungary", "country"),
    ("danube", "Danube", "river"), ("rhine", "Rhine", "river"), ("elbe", "Elbe", "river"),
    ("vltava", "Vltava", "river"), ("seine", "Seine", "river"), ("thames", "Thames", "river"),
    ("vistula", "Vistula", "river"), ("tiber", "Tiber", "river"), ("neva", "Neva", "river"),
    ("saale", "Saale", "river"), ("moskva", "Moskva", "river"), ("pleisse", "Pleisse", "river"),
    ("vienna", "Vienna", "city"), ("bonn", "Bonn", "city"), ("salzburg", "Salzburg", "city"),
    ("rohrau", "Rohrau", "town"), ("zelazowa", "Żelazowa Wola", "town"), ("eisenach", "Eisenach", "town"),
    ("halle", "Halle", "city"), ("venice", "Venice", "city"), ("raiding", "Raiding", "town"),
    ("hamburg", "Hamburg", "city"), ("votkinsk", "Votkinsk", "town"), ("nelahozeves", "Nelahozeves", "town"),
    ("paris", "Paris", "city"), ("leipzig", "Leipzig", "city"), ("london", "London", "city"),
    ("bayreuth", "Bayreuth", "city"), ("stpetersburg", "Saint Petersburg", "city"), ("prague", "Prague", "city"),
    ("berlin", "Berlin", "city"), ("rome", "Rome", "city"), ("moscow", "Moscow", "city"),
    ("warsaw", "Warsaw", "city"), ("budapest", "Budapest", "city"), ("legnago", "Legnago", "town"),
    ("beethoven", "Ludwig van Beethoven", "person"), ("mozart", "Wolfgang Amadeus Mozart", "person"),
    ("haydn", "Joseph Haydn", "person"), ("chopin", "Frédéric Chopin", "person"),
    ("schubert", "Franz Schubert", "person"), ("bach", "Johann Sebastian Bach", "person"),
    ("handel", "George Frideric Handel", "person"), ("vivaldi", "Antonio Vivaldi", "person"),
    ("liszt", "Franz Liszt", "person"), ("brahms", "Johannes Brahms", "person"),
    ("tchaikovsky", "Pyotr Ilyich Tchaikovsky", "person"), ("dvorak", "Antonín Dvořák", "person"),
    ("salieri", "Antonio Salieri", "person"), ("czerny", "Carl Czerny", "person"),
    ("leopold", "Leopold Mozart", "person"), ("neefe", "Christian Gottlob Neefe", "person"),
    ("ninth", "Symphony No. 9", "work"), ("moonlight", "Moonlight Sonata", "work"),
    ("magicflute", "The Magic Flute", "work"), ("requiem", "Requiem in D minor", "work"),
    ("creation", "The Creation", "work"), ("minutewaltz", "Minute Waltz", "work"),
    ("trout", "Trout Quintet", "work"), ("brandenburg", "Brandenburg Concertos", "work"),
    ("messiah", "Messiah", "work"), ("seasons", "The Four Seasons", "work"),
    ("rhapsodies", "Hungarian Rhapsodies", "work"), ("germanrequiem", "A German Requiem", "work"),
    ("swanlake", "Swan Lake", "work"), ("newworld", "New World Symphony", "work"),
]

# Mentioned in the articles but absent from the knowledge graph.
UNLINKED = {"salzach": "Salzach", "karlsbridge": "Charles Bridge"}

COMPOSERS = {
    #  key: birth, death, citizenship, teacher or None, work, work genre, extra occupation, languages
    "beethoven": ("bonn", "vienna", "germany", "haydn", "ninth", "symphony", "pianist", ["german"]),
    "mozart": ("salzburg", "vienna", "austria", "leopold", "magicflute", "opera", "pianist", ["german", "italian"]),
    "haydn": ("rohrau", "vienna", "austria", None, "creation", "oratorio", "conductor", ["german"]),
    "chopin": ("zelazowa", "paris", "poland", None, "minutewaltz", "piano_music", "pianist", ["polish", "french"]),
    "schubert": ("vienna", "vienna", "austria", "salieri", "trout", "chamber", "pianist", ["german"]),
    "bach": ("eisenach", "leipzig", "germany", None, "brandenburg", "concerto", "organist", ["german"]),
    "handel": ("halle", "london", "uk", None, "messiah", "oratorio", "organist", ["german", "english"]),
    "vivaldi": ("venice", "vienna", "italy", None, "seasons", "concerto", "conductor", ["italian"]),
    "liszt": ("raiding", "bayreuth", "hungary", "czerny", "rhapsodies", "piano_music", "pianist", ["hungarian", "german"]),
    "brahms": ("hamburg", "vienna", "germany", None, "germanrequiem", "oratorio", "pianist", ["german"]),
    "tchaikovsky": ("votkinsk", "stpetersburg", "russia", None, "swanlake", "ballet", "conductor", ["russian"]),
    "dvorak": ("nelahozeves", "prague", "czechia", None, "newworld", "symphony", "organist", ["czech"]),
    "salieri": ("legnago", "vienna", "italy", None, "requiem", "opera", "conductor", ["italian"]),
    "czerny": ("vienna", "vienna", "austria", "beethoven", "moonlight", "piano_music", "pianist", ["german"]),
}
EXTRA_TEACHERS = [("liszt", "salieri"), ("beethoven", "salieri"), ("beethoven", "neefe"), ("schubert", "czerny")]
PARENTS = {"mozart": "leopold"}
REQUIEM_COMPOSER = "mozart"

CITY_COUNTRY = {
    "vienna": "austria", "bonn": "germany", "salzburg": "austria", "rohrau": "austria", "zelazowa": "poland",
    "eisenach": "germany", "halle": "germany", "venice": "italy", "raiding": "austria", "hamburg": "germany",
    "votkinsk": "russia", "nelahozeves": "czechia", "paris": "france", "leipzig": "germany", "london": "uk",
    "bayreuth": "germany", "stpetersburg": "russia", "prague": "czechia", "berlin": "germany", "rome": "italy",
    "moscow": "russia", "warsaw": "poland", "budapest": "hungary", "legnago": "italy",
}
CITY_RIVER = {
    "vienna": "danube", "bonn": "rhine", "hamburg": "elbe", "prague": "vltava", "paris": "seine",
    "london": "thames", "warsaw": "vistula", "rome": "tiber", "stpetersburg": "neva", "halle": "saale",
    "moscow": "moskva", "leipzig": "pleisse", "budapest": "danube",
}
CAPITALS = {"germany": "berlin", "austria": "vienna", "poland": "warsaw", "italy": "rome", "france": "paris",
            "uk": "london", "russia": "moscow", "czechia": "prague", "hungary": "budapest"}
LANGUAGES = {"germany": "german", "austria": "german", "poland": "polish", "italy": "italian",
             "france": "french", "uk": "english", "russia": "russian", "czechia": "czech", "hungary": "hungarian"}
BORDERS = [("germany", "austria"), ("germany", "poland"), ("germany", "france"), ("germany", "czechia"),
           ("austria", "italy"), ("austria", "czechia"), ("austria", "hungary"), ("poland", "czechia"),
           ("poland", "russia"), ("france", "italy")]

RELATIONS = {
    "P31": "instance of", "P106": "occupation", "P19": "place of birth", "P20": "place of death",
    "P27": "country of citizenship", "P802": "student", "P1066": "student of", "P17": "country",
    "P36": "capital", "P206": "located in or next to body of water", "P86": "composer", "P800": "notable work",
    "P136": "genre", "P37": "official language", "P47": "shares border with", "P30": "continent",
    "P21": "sex or gender", "P1412": "languages spoken, written or signed", "P22": "father", "P40": "child",
    "P1376": "capital of",
}

FILLER = [
    "The work was widely praised by critics of the period.",
    "Many of these pieces are still performed in concert halls today.",
    "Contemporary accounts describe a demanding and restless personality.",
    "Several letters from these years survive in private collections.",
    "The period brought both financial difficulty and public recognition.",
    "Later scholars have studied the manuscripts in considerable detail.",
    "Public concerts became an important source of income.",
    "The influence of this music on later generations was considerable.",
    "Tours across the region brought wider fame.",
    "Biographers disagree about several details of these events.",
    "Much of the music was published only after many years.",
    "Patrons from the nobility supported the work for a long time.",
]
CITY_FILLER = [
    "The old town attracts many visitors every year.",
    "Its university is one of the oldest in the region.",
    "The city has a long tradition of music and theatre.",
    "Trade along the river shaped its early history.",
    "Several churches and palaces date from the baroque period.",
    "The population grew quickly during the nineteenth century.",
    "Today it is an important centre of culture and education.",
    "Its opera house hosts performances throughout the season.",
]


def build_ids():
    ids, labels, kinds = {}, {}, {}
    for i, (key, label, kind) in enumerate(ENTITIES):
        ids[key] = f"Q{9100001 + i}"
        labels[key] = label
        kinds[key] = kind
    for j, (key, label) in enumerate(UNLINKED.items()):
        ids[key] = f"Q{9900001 + j}"
        labels[key] = label
    return ids, labels, kinds


def build_triples(ids, kinds):
    t = []

    def add(h, r, tail):
        t.append((ids[h], r, ids[tail]))

    for key, kind in kinds.items():
        if kind == "person":
            add(key, "P31", "human")
            add(key, "P21", "male")
        elif kind in ("city", "town"):
            add(key, "P31", kind)
        elif kind == "country":
            add(key, "P31", "country")
            add(key, "P30", "continent_eu")
        elif kind == "river":
            add(key, "P31", "river")
            add(key, "P30", "continent_eu")
    for c, (birth, death, cit, teacher, work, genre, occ, langs) in COMPOSERS.items():
        add(c, "P19", birth)
        add(c, "P20", death)
        add(c, "P27", cit)
        add(c, "P106", "composer")
        add(c, "P106", occ)
        add(c, "P800", work)
        add(work, "P86", c)
        add(work, "P136", genre)
        for lang in langs:
            add(c, "P1412", lang)
        if teacher:
            add(c, "P1066", teacher)
            add(teacher, "P802", c)
    for student, teacher in EXTRA_TEACHERS:
        add(student, "P1066", teacher)
        add(teacher, "P802", student)
    for child, parent in PARENTS.items():
        add(child, "P22", parent)
        add(parent, "P40", child)
    add("leopold", "P106", "composer")
    add("leopold", "P27", "austria")
    add("neefe", "P106", "organist")
    add("neefe", "P27", "germany")
    for city, country in CITY_COUNTRY.items():
        add(city, "P17", country)
    for city, river in CITY_RIVER.items():
        add(city, "P206", river)
    for country, capital in CAPITALS.items():
        add(country, "P36", capital)
        add(capital, "P1376", country)
        add(country, "P37", LANGUAGES[country])
    for a, b in BORDERS:
        add(a, "P47", b)
        add(b, "P47", a)
    return t


class ArticleWriter:
    def __init__(self, title, page_id, entity, ids, labels):
        self.title, self.page_id, self.entity = title, page_id, entity
        self.ids, self.labels = ids, labels
        self.words, self.links = [], []

    def sentence(self, *pieces):
        for piece in pieces:
            if isinstance(piece, tuple):
                key = piece[0]
                words = self.labels[key].split()
                start = len(self.words)
                self.words.extend(words)
                link = {"word_start": start, "word_end": len(self.words), "target_title": self.labels[key]}
                if key in self.ids and key not in UNLINKED:
                    link["target_entity"] = self.ids[key]
                self.links.append(link)
            else:
                for w in piece.split():
                    if w in {".", ",", ";"} and self.words:
                        self.words[-1] += w
                    else:
                        self.words.append(w)

    def record(self):
        return {"title": self.title, "page_id": self.page_id, "entity": self.ids.get(self.entity),
                "words": self.words, "links": self.links}


def composer_article(key, ids, labels, rng, page_id, long):
    birth, death, cit, teacher, work, genre, occ, _ = COMPOSERS[key]
    a = ArticleWriter(labels[key], page_id, key, ids, labels)
    a.sentence(labels[key] + " was a composer and " + labels[occ] + " .")
    a.sentence("He was born in", (birth,), ", a town in", (CITY_COUNTRY[birth],), ".")
    for s in rng.sample(FILLER, 2):
        a.sentence(s)
    teachers = ([teacher] if teacher else []) + [t for s, t in EXTRA_TEACHERS if s == key]
    for t in teachers:
        a.sentence("As a young musician he studied with", (t,), ".")
    if key in PARENTS:
        a.sentence("His father", (PARENTS[key],), "was also a musician.")
    a.sentence("Among his best known works is", (work,), ", a piece of", labels[genre], ".")
    for s in rng.sample(FILLER, 3 if long else 2):
        a.sentence(s)
    a.sentence("He spent his last years in", (death,), "and died there.")
    a.sentence("Later he was buried in", (death,), ", in", (CITY_COUNTRY[death],), ".")
    target = 200 if long else 100
    pool = list(FILLER)
    rng.shuffle(pool)
    i = 0
    while len(a.words) < target:
        a.sentence(pool[i % len(pool)])
        i += 1
    return a.record()


def city_article(key, ids, labels, rng, page_id):
    a = ArticleWriter(labels[key], page_id, key, ids, labels)
    country = CITY_COUNTRY[key]
    a.sentence(labels[key], "is a city in", (country,), ".")
    if CAPITALS.get(country) == key:
        a.sentence("It is the capital and largest city of", (country,), ".")
    for s in rng.sample(CITY_FILLER, 2):
        a.sentence(s)
    if key in CITY_RIVER:
        a.sentence("The", (CITY_RIVER[key],), "flows through the city.")
    if key == "salzburg":
        a.sentence("The", ("salzach",), "flows through the old town.")
    if key == "prague":
        a.sentence("The", ("karlsbridge",), "crosses the river in the centre.")
    born = [c for c, v in COMPOSERS.items() if v[0] == key]
    for c in born:
        a.sentence("The composer", (c,), "was born here.")
    for s in rng.sample(CITY_FILLER, 2):
        a.sentence(s)
    pool = list(CITY_FILLER)
    rng.shuffle(pool)
    i = 0
    while len(a.words) < 100:
        a.sentence(pool[i % len(pool)])
        i += 1
    return a.record()


def segment_texts(article):
    words, out, prev_end, start = article["words"], [], 0, 0
    while start < len(words):
        end = min(start + WINDOW, len(words))
        if not out or end > prev_end:
            out.append(" ".join(words[start:end]))
            prev_end = end
        start += STEP
    return out


def wiki_url(title):
    return "https://en.wikipedia.org/wiki/" + urllib.parse.quote(title.replace(" ", "_"))


def normalize_question(q):
    s = " ".join(q.lower().split())
    while s and s[-1] in "? ":
        s = s[:-1]
    return s + "?" if s else s


def main():
    root = Path(__file__).resolve().parent.parent
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else root / "data" / "demo"
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240607)
    ids, labels, kinds = build_ids()

    triples = build_triples(ids, kinds)
    (out / "kg").mkdir(exist_ok=True)
    (out / "kg" / "triples.tsv").write_text("".join(f"{h}\t{r}\t{t}\n" for h, r, t in triples), encoding="utf-8")
    label_lines = [f"{ids[k]}\t{labels[k]}\n" for k, _, _ in ENTITIES]
    label_lines += [f"{pid}\t{name}\n" for pid, name in RELATIONS.items()]
    (out / "kg" / "labels.tsv").write_text("".join(label_lines), encoding="utf-8")

    articles = {}
    long_ones = {"beethoven", "mozart"}
    for n, key in enumerate(COMPOSERS):
        articles[key] = composer_article(key, ids, labels, rng, f"page-{n + 1}", key in long_ones)
    for n, key in enumerate(["vienna", "salzburg", "prague", "paris", "leipzig", "hamburg"]):
        articles[key] = city_article(key, ids, labels, rng, f"page-{100 + n}")

    replay = []

    def rec(provider, request, response):
        replay.append({"provider": provider, "request": request, "response": response})

    for a in articles.values():
        rec("article", {"title": a["title"]}, a)

    # Seed questions from an existing QA collection and the suggestions their
    # prefixes receive.
    seeds = [
        "Where was Johann Sebastian Bach born?",
        "Where was Antonio Vivaldi born?",
        "Where did Franz Schubert die?",
        "Where did Johannes Brahms die?",
        "Who was the teacher of Franz Liszt?",
        "What river flows through Vienna?",
        "Which country is Salzburg in?",
        "When did Frédéric Chopin move to Paris?",
    ]
    born_q = {c: f"Where was {labels[c]} born?" for c in COMPOSERS}
    died_q = {c: f"Where did {labels[c]} die?" for c in COMPOSERS}
    teacher_q = {c: f"Who was the teacher of {labels[c]}?" for c in ["liszt", "schubert", "mozart", "czerny"]}
    river_q = {c: f"What river flows through {labels[c]}?" for c in ["vienna", "prague", "hamburg", "salzburg"]}
    country_q = {c: f"Which country is {labels[c]} in?" for c in ["salzburg", "leipzig", "prague"]}

    suggestions = {
        "Where was": [born_q[c] for c in ["bach", "vivaldi", "beethoven", "mozart", "chopin", "handel", "dvorak",
                                          "tchaikovsky"]] + ["Where was the Titanic built?"],
        "Where did": [died_q[c] for c in ["schubert", "brahms", "haydn", "bach", "liszt", "chopin"]] +
                     ["Where did the Magic Flute premiere first?"],
        "Who was the teacher of": list(teacher_q.values()),
        "What river flows through": list(river_q.values()),
        "Which country is": list(country_q.values()) + ["Which country is the best for music?"],
        "When did": ["When did Frédéric Chopin move to Paris?"],
    }
    for prefix, items in suggestions.items():
        rec("suggest", {"prefix": prefix}, items)

    # question -> (topic, answer key, article keys returned by search, gold, quote override)
    plan = {}
    for c in ["bach", "vivaldi", "beethoven", "mozart", "chopin", "handel", "dvorak", "tchaikovsky"]:
        birth = COMPOSERS[c][0]
        hits = [c] + ([birth] if birth in articles else [])
        plan[born_q[c]] = dict(topic=c, answer=birth, hits=hits)
    for c in ["schubert", "brahms", "haydn", "bach", "liszt", "chopin"]:
        plan[died_q[c]] = dict(topic=c, answer=COMPOSERS[c][1], hits=[c])
    plan[teacher_q["liszt"]] = dict(topic="liszt", answer="czerny", hits=["liszt"])
    plan[teacher_q["schubert"]] = dict(topic="schubert", answer="salieri", hits=["schubert"])
    plan[teacher_q["mozart"]] = dict(topic="mozart", answer="leopold", hits=["mozart"])
    plan[teacher_q["czerny"]] = dict(topic="czerny", answer="beethoven", hits=["czerny", "beethoven"])
    for c in ["vienna", "prague", "hamburg"]:
        plan[river_q[c]] = dict(topic=c, answer=CITY_RIVER[c], hits=[c])
    plan[river_q["salzburg"]] = dict(topic="salzburg", answer="salzach", hits=["salzburg"])
    for c in country_q:
        plan[country_q[c]] = dict(topic=c, answer=CITY_COUNTRY[c], hits=[c])
    plan["Where did the Magic Flute premiere first?"] = dict(topic="magicflute", answer="vienna", hits=["mozart"],
                                                             flag="incorrect_question")
    plan["When did Frédéric Chopin move to Paris?"] = dict(topic="chopin", answer="paris", hits=["chopin"],
                                                           flag="incorrect_question")
    # Search returns an unrelated article.
    plan[died_q["haydn"]]["hits"] = ["hamburg"]
    plan[died_q["haydn"]]["flag"] = "incorrect_passage"
    plan[died_q["haydn"]]["quote"] = "Hamburg"
    # The tagger marks the wrong fragment.
    plan[died_q["liszt"]]["quote"] = "Raiding"
    plan[died_q["liszt"]]["flag"] = "incorrect_fragment"
    plan[born_q["handel"]]["quote"] = "born in Halle"
    # Unusable tagger replies.
    plan[born_q["dvorak"]]["quote"] = "I am sorry, the passage does not say."
    plan[country_q["prague"]]["quote"] = "Unknown."
    # Paraphrased tagger replies that still ground.
    plan[died_q["schubert"]]["quote"] = "he died in Vienna"
    plan[teacher_q["schubert"]]["quote"] = "studies with Antonio Salieri"

    gold = {}
    for q, p in plan.items():
        key = normalize_question(q)
        hit_list = [{"title": articles[h]["title"], "url": wiki_url(articles[h]["title"])} for h in p["hits"]]
        hit_list.insert(1, {"title": labels[p["topic"]] + " biography", "url": "https://www.example.org/music/" +
                            urllib.parse.quote(labels[p["topic"]].lower().replace(" ", "-"))})
        rec("search", {"query": key}, hit_list)
        quote = p.get("quote", labels[p["answer"]])
        rec("qa_tag", {"question": key}, quote)
        pool = [t for h in p["hits"] for t in segment_texts(articles[h])]
        anchor = labels[p["answer"]]
        scores, best = [], None
        for i, text in enumerate(pool):
            hit = anchor in text and best is None
            best = i if hit else best
            scores.append(1.0 if hit else round(0.5 - 0.01 * i, 4))
        rec("rerank", {"query": " ".join(q.split()), "passages": pool}, scores)
        g = {"flag": p.get("flag", "correct"), "answers": [ids[p["answer"]]], "topics": [ids[p["topic"]]]}
        gold[key] = g
    gold[normalize_question(teacher_q["mozart"])]["reject"] = True

    deviations = {
        "annotator-2": {
            normalize_question(river_q["hamburg"]): {"flag": "incorrect_passage"},
            normalize_question(born_q["mozart"]): {"topics": []},
        }
    }
    script = {"default_flag": "incorrect_question", "gold": gold, "deviations": deviations}
    (out / "annotations").mkdir(exist_ok=True)
    (out / "annotations" / "script.json").write_text(json.dumps(script, indent=2, ensure_ascii=False) + "\n",
                                                     encoding="utf-8")
    review = {"statuses": {}, "rules": [
        {"template": "one-hop", "input": ids["vienna"], "status": "incorrect"},
        {"template": "reverse-two-hop", "status": "resembling"},
        {"template": "two-hop", "input": "P47", "status": "incorrect"},
    ]}
    (out / "annotations" / "template_review.json").write_text(json.dumps(review, indent=2) + "\n", encoding="utf-8")

    (out / "seed_questions.txt").write_text("".join(s + "\n" for s in seeds), encoding="utf-8")
    titles = [f"{labels[k]}\t{ids[k]}\n" for k, _, _ in ENTITIES]
    (out / "wiki_titles.tsv").write_text("".join(titles), encoding="utf-8")
    lemmas = {"died": "die", "dies": "die", "studied": "study", "studies": "study", "flows": "flow",
              "flowed": "flow", "works": "work", "rivers": "river", "born": "bear", "was": "be", "is": "be"}
    (out / "lemmas.tsv").write_text("".join(f"{k}\t{v}\n" for k, v in sorted(lemmas.items())), encoding="utf-8")

    (out / "replay").mkdir(exist_ok=True)
    with open(out / "replay" / "providers.jsonl", "w", encoding="utf-8") as f:
        for r in replay:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")

    config = {
        "seed": 13,
        "language": "en",
        "output_dir": "out",
        "kg": {"triples": "kg/triples.tsv", "labels": "kg/labels.tsv"},
        "questions": {"seeds": "seed_questions.txt", "max_completions": 10, "ner": ["capitalized"]},
        "passages": {"window": WINDOW, "step": STEP},
        "tagging": {"min_ratio": 0.8, "lemmas": "lemmas.tsv"},
        "linking": {"sim_threshold": 0.85, "wiki_titles": "wiki_titles.tsv"},
        "verification": {"annotators": ["annotator-1", "annotator-2"], "overlap": 0.3,
                         "script": "annotations/script.json"},
        "templates": {"file": "../../assets/templates/templates.en.json", "limit_per_template": 6,
                      "similarity_threshold": 0.6, "review": "annotations/template_review.json",
                      "default_status": "correct"},
        "assemble": {"test_fraction": 0.2},
        "eval": {"k": 40, "hops_1h": 3, "hops_2h": 2, "k_values": [1, 5, 10, 100], "split": "test"},
        "providers": {"mode": "replay", "replay": ["replay/providers.jsonl"], "miss_policy": "empty",
                      "rerank": "replay", "wiki_search": "local", "inflect": "local", "paraphrase": "local",
                      "llm": "echo-facts", "embed": "hashing"},
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    print(f"{len(triples)} triples, {len(articles)} articles, {len(replay)} replay records -> {out}")


if __name__ == "__main__":
    main()
