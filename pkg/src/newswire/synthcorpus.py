"""Deterministic synthetic desk corpora.

Every generator takes an explicit seed and builds tweets from fixed
templates, so all bundled corpora are reproducible byte-for-byte without
shipping tens of thousands of static lines. Vocabulary sticks to the
bundled wordlist so the language gate behaves.
"""
from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

from newswire.model import StreamTag, Tweet, UserRef, format_ts

EPOCH = datetime(2016, 9, 1, 0, 0, 0, tzinfo=timezone.utc)


def _ts(offset_s: float) -> datetime:
    return EPOCH + timedelta(seconds=offset_s)


def _user(rng: random.Random, kind: str = "person", idx: int | None = None) -> UserRef:
    n = idx if idx is not None else rng.randrange(100000)
    if kind == "news":
        handles = ["reuters", "ap", "breakingnews", "localnewsdesk", "metrodesk",
                   "citynewswire", "statewire", "worldwatch", "cnn", "bbcbreaking"]
        h = handles[n % len(handles)]
        return UserRef(user_id="n" + str(n), handle=h, verified=True,
                       followers=rng.randrange(100000, 5000000))
    if kind == "org":
        handles = ["usgs", "nws", "fema", "houstonpolice", "chicagopolice",
                   "fdny", "lafd", "cityofchicago", "redcross", "nasa"]
        h = handles[n % len(handles)]
        return UserRef(user_id="o" + str(n), handle=h, verified=True,
                       followers=rng.randrange(50000, 2000000))
    verified = rng.random() < 0.03
    return UserRef(user_id="u" + str(n), handle=f"user{n}",
                   verified=verified,
                   followers=int(10 ** (rng.random() * 4)))


_COUNTER = 0


def _mk(rng, text, offset_s, kind="person", lang="en", tag=StreamTag.SAMPLE,
        tid=None, user=None, urls=(), retweet_of=None) -> Tweet:
    global _COUNTER
    _COUNTER += 1
    hashtags = tuple(t[1:].lower() for t in text.split() if t.startswith("#") and len(t) > 1)
    return Tweet(
        id=tid or f"syn{_COUNTER:07d}_{rng.randrange(1 << 20):05x}",
        created_at=_ts(offset_s),
        text=text,
        author=user or _user(rng, kind),
        urls=tuple(urls),
        hashtags=hashtags,
        lang=lang,
        stream_tag=tag,
        retweet_of=retweet_of,
    )


# ---------------------------------------------------------------------------
# noise-filter training corpus

_SPAM = [
    "WIN a FREE {item} click here {url} #win #free #giveaway",
    "claim your prize now {url} limited offer #free #winner #prize",
    "FREE {item} for the first 100 followers click here {url} #free",
    "you won a {item} claim now {url} #winner #lucky #prize #free",
    "make money fast from home {url} click here #money #win",
]
_ADS = [
    "SALE {pct} off {item} shop now {url} #deal #sale",
    "limited offer buy {item} today {url} use code SAVE #discount",
    "new {item} in store this weekend {url} #shopping #sale",
    "order {item} now with free shipping {url} #deal",
    "{pct} off everything this weekend only shop {url} #sale #offer",
]
_CHAT = [
    "so tired today lol",
    "coffee with friends this morning was so fun",
    "i love this weather today",
    "ugh my morning was crazy lol",
    "dinner with the family tonight so happy",
    "cannot wait for the weekend",
    "my dog is the best thing in my life",
    "watching movies all night with friends",
    "lol that game last night was wild",
    "i need more coffee this morning",
    "you all are the best friends ever",
    "omg i love this song so much",
    "fire drill at school today lol so boring",
    "watching the storm from my window tonight",
    "my phone died during the game ugh",
]
_INFO = [
    "did you know the {place} tower is over 300 meters tall #facts",
    "tips for better sleep every night #health #tips",
    "on this day in history the first {item} was sold #history",
    "fun fact a {item} lasts about ten years #trivia",
    "how to save money on {item} this year #tips",
    "top ten facts about the ocean #facts #trivia",
    "this week in history the {place} bridge opened #history",
    "earthquake safety tips for your home #tips #safety",
    "how storms form explained in one minute #facts",
]
_NEWS = [
    "BREAKING: explosion reported at the port of {city}, crews responding",
    "police respond to shooting near downtown {city}, road closed",
    "magnitude {mag} earthquake strikes near {city}, no damage reports yet",
    "fire crews battle warehouse blaze in {city}, residents evacuated",
    "flooding closes highway near {city} after heavy rain, officials say",
    "UPDATE: {city} police confirm two injured in downtown crash",
    "storm knocks out power to thousands in {city}, crews working",
    "officials confirm train derailment outside {city}, no injuries",
]
_EVENT = [
    "just felt an earthquake here in {city} wow",
    "huge fire on main street in {city} right now, smoke everywhere",
    "hearing sirens all over downtown {city}, anyone know what happened",
    "power just went out across {city}, whole block is dark",
    "traffic stopped on the highway near {city}, looks like a bad crash",
    "loud blast just now near the {city} station, windows shook",
]
_ITEMS = ["iphone", "laptop", "watch", "camera", "ticket", "phone", "tablet"]
_CITIES = ["houston", "chicago", "portland", "denver", "seattle", "dallas",
           "boston", "atlanta", "miami", "phoenix"]
_PLACES = ["river", "harbor", "city", "park"]


def _fill(rng, tpl):
    return tpl.format(
        item=rng.choice(_ITEMS),
        city=rng.choice(_CITIES),
        place=rng.choice(_PLACES),
        pct=f"{rng.choice([20, 30, 40, 50, 60, 70])}%",
        mag=f"{rng.choice([3, 4, 5])}.{rng.randrange(10)}",
        url=f"http://promo{rng.randrange(500)}.example.com/x{rng.randrange(99)}",
    )


def noise_corpus(size: int = 10000, seed: int = 1101) -> list[tuple[Tweet, str]]:
    """Labeled corpus: 80% noise across four kinds, 20% news/events.

    Labels: spam, advertisement, chitchat, general_info, news, event.
    news + event together are the protected class downstream.
    """
    rng = random.Random(seed)
    mix = (
        [("spam", _SPAM)] * 20 + [("advertisement", _ADS)] * 20
        + [("chitchat", _CHAT)] * 25 + [("general_info", _INFO)] * 15
        + [("news", _NEWS)] * 12 + [("event", _EVENT)] * 8
    )
    out: list[tuple[Tweet, str]] = []
    offset = 0.0
    for i in range(size):
        label, templates = mix[rng.randrange(len(mix))]
        text = _fill(rng, rng.choice(templates))
        kind = "person"
        urls = ()
        if label == "news":
            kind = "news" if rng.random() < 0.7 else "org"
        if "{" not in text and "http" in text:
            urls = tuple(t for t in text.split() if t.startswith("http"))
        # spam repeats verbatim across accounts inside short windows
        if label == "spam" and rng.random() < 0.5 and out:
            for prev, plabel in reversed(out[-30:]):
                if plabel == "spam":
                    text = prev.text
                    break
        offset += rng.random() * 1.2
        out.append((_mk(rng, text, offset, kind=kind, urls=urls), label))
    return out


NOISE_KINDS = ("spam", "advertisement", "chitchat", "general_info")


def is_news_label(label: str) -> bool:
    return label in ("news", "event")


# ---------------------------------------------------------------------------
# clustering corpora with planted events

_EVENT_CORES = [
    "explosion port houston crews smoke evacuated warehouse blast",
    "earthquake magnitude aftershock epicenter depth rattled shook buildings",
    "wildfire acres burned containment crews evacuation ridge flames",
    "shooting gunman suspect fled officers downtown witnesses shots",
    "flooding river crest levee residents rescue boats stranded",
    "derailment train tracks freight cars spilled crossing injuries",
    "blackout power grid outage crews transformer substation restored",
    "protest march demonstrators downtown streets banners chanting police",
    "tornado touchdown funnel damage roofs debris warning sirens",
    "bridge collapse structure span commuters closed inspection engineers",
    "hostage standoff negotiator armed building surrounded released unharmed",
    "eruption volcano ash plume lava villages evacuated alert",
    "crash collision highway lanes pileup fog injuries ambulances",
    "storm surge landfall winds category coastal evacuations shelters",
    "robbery bank vault suspects masked getaway cash manhunt",
    "leak chemical plant fumes workers hazmat perimeter sealed",
    "riot stadium fans clashes bottles arrests tear gas",
    "avalanche skiers slope buried rescue beacons resort ridge",
    "sinkhole street swallowed cars utilities crater cordon repairs",
    "strike workers union picket wages walkout factory talks",
    "heatwave record temperatures hospitals advisories cooling centers deaths",
    "landslide mudslide hillside homes buried rain rescue dogs",
    "capsized ferry passengers lifeboats coast guard rescued missing",
    "drought reservoir levels rationing farmers crops wells dry",
    "meteor fireball sky flash sonic boom windows reports",
    "scandal resignation minister documents leaked inquiry pressure mounting",
    "outbreak cases quarantine hospital patients screening virus spread",
    "kidnapping ransom abducted vehicle witnesses amber alert search",
    "explosion refinery flare injured blast shattered windows plant",
    "crash plane runway emergency landing gear passengers evacuated",
    "fire apartment storey residents ladders smoke alarms overnight",
    "shooting nightclub victims panicked exits officers casualties scene",
    "flood flash canyon hikers swept rescue helicopter stranded",
    "earthquake tsunami warning coastal sirens higher ground waves",
    "blizzard whiteout stranded motorists plows drifts closures county",
    "bombing market blast casualties shrapnel perimeter investigators claimed",
    "collapse mine shaft trapped miners rescue drilling contact",
    "hijack bus passengers armed standoff lanes negotiation released",
    "spill oil tanker slick booms cleanup coastline wildlife",
    "shooting school lockdown students parents reunification officers secure",
    "explosion pipeline rupture flames crews valve isolated evacuated",
    "crash helicopter tour rotor wreckage investigators witnesses hillside",
    "fire market stalls vendors flames overnight losses rebuilt",
    "riot prison inmates guards lockdown negotiation control restored",
    "flooding subway tunnels pumps service suspended commuters stranded",
    "storm hail crops windshields dents canopies warning cells",
    "attack cyber servers ransom systems offline restored backups",
    "collapse crane construction site workers injured inspection halted",
    "eruption geyser park tourists scalded rangers perimeter closed",
    "explosion fireworks depot sparks chain blasts neighborhood shaken",
]

_FILLER = ("reports say", "updates to follow", "more soon", "developing now",
           "watching this", "stay safe", "just in", "officials on scene",
           "details unclear", "witnesses nearby")


def _wordlist() -> list[str]:
    from newswire import resources
    return sorted(resources.english_words())


_CLUSTER_PLANS = [
    # (n_events, tweets_per_event, n_noise, loose_fraction)
    (5, 10, 1000, 0.0),
    (10, 8, 1400, 0.0),
    (20, 6, 800, 0.1),
    (35, 5, 1200, 0.1),
    (50, 4, 1700, 0.3),
]


def clustering_corpus(idx: int, seed: int = 2300) -> tuple[list[Tweet], dict[str, int | None]]:
    """Corpus #idx (0..4): planted events in arrival order plus noise.

    Returns (tweets, truth) where truth maps tweet id -> planted event
    index, or None for noise. Loose events keep pairwise similarity above
    the unit threshold but with low term-set overlap, which bucketed
    candidate search tends to miss.
    """
    n_events, per_event, n_noise, loose_frac = _CLUSTER_PLANS[idx]
    rng = random.Random(seed + idx * 17)
    words = _wordlist()
    items: list[tuple[float, Tweet, int | None]] = []

    horizon = 6 * 3600.0
    for e in range(n_events):
        core = _EVENT_CORES[e % len(_EVENT_CORES)].split()
        loose = (e % 10 < 10 * loose_frac)
        start = rng.random() * (horizon - 1800)
        for j in range(per_event):
            if loose:
                take = rng.sample(core, 6)  # 8 choose 6: pairwise overlap >= 4
            else:
                take = core[:]
                rng.shuffle(take)
                take = take[:7]
            fill = rng.choice(_FILLER).split()
            body = take + fill[: rng.randrange(1, 3)]
            rng.shuffle(body)
            text = " ".join(body)
            at = start + j * rng.uniform(20, 120)
            tw = _mk(rng, text, at, tid=f"c{idx}e{e:02d}t{j:02d}")
            items.append((at, tw, e))

    for k in range(n_noise):
        at = rng.random() * horizon
        body = rng.sample(words, 8)
        tw = _mk(rng, " ".join(body), at, tid=f"c{idx}n{k:04d}")
        items.append((at, tw, None))

    items.sort(key=lambda x: (x[0], x[1].id))
    tweets = [t for _, t, _ in items]
    truth = {t.id: e for _, t, e in items}
    return tweets, truth


def corpus_vectors(tweets):
    """Batch tf-idf over a finished corpus (module tests and oracles)."""
    from newswire.model import DocumentFrequencyTable, tfidf_vector, tokenize

    df = DocumentFrequencyTable()
    toks = {}
    for t in tweets:
        toks[t.id] = tokenize(t.text)
        df.add_document(toks[t.id])
    return {t.id: tfidf_vector(toks[t.id], df) for t in tweets}, df


# ---------------------------------------------------------------------------
# themed news-account corpora (topic + object model training)

_THEME_WORDS = {
    "Crisis": ("fire explosion crews evacuated smoke blast injured rescue "
               "emergency flames collapsed trapped residents scene").split(),
    "Politics": ("election vote senate campaign ballot debate president "
                 "congress policy bill lawmakers approval speech polls").split(),
    "Business": ("market shares earnings stocks trading investors profit "
                 "quarter revenue deal merger prices growth forecast").split(),
    "Sports": ("game score championship season coach team playoff win "
               "fans league goal match title finals").split(),
    "Weather": ("storm rain forecast winds flood warning snow temperatures "
                "front hail thunder gusts advisory inches").split(),
    "Technology": ("launch software rocket satellite data app devices "
                   "network update chips internet systems servers startup").split(),
    "Health": ("hospital patients virus outbreak vaccine cases doctors "
               "health screening clinic symptoms infections study care").split(),
    "Entertainment": ("film premiere album concert awards actor stage tour "
                      "tickets audience show release studio singer").split(),
    "Law/Crime": ("police arrest suspect court charges investigation "
                  "officers trial verdict custody robbery warrant judge").split(),
}

# weighted rosters; weights drive the learned entity table
_PLACE_ROSTER = [("Houston", 30), ("Chicago", 25), ("Portland", 12),
                 ("Denver", 10), ("Seattle", 10), ("Dallas", 8),
                 ("Boston", 8), ("Miami", 6), ("Phoenix", 5), ("Oklahoma", 5)]
_PERSON_ROSTER = [("Donald Trump", 30), ("Hillary Clinton", 22),
                  ("Barack Obama", 12), ("Bernie Sanders", 8),
                  ("Elon Musk", 8), ("Angela Merkel", 5), ("James Comey", 4)]
_ORG_ROSTER = [("White House", 20), ("Congress", 14), ("FEMA", 10),
               ("Red Cross", 8), ("SpaceX", 10), ("NASA", 8),
               ("Reuters", 6), ("Senate", 8), ("Pentagon", 5), ("FBI", 7)]


def _weighted(rng, roster):
    total = sum(w for _, w in roster)
    pick = rng.randrange(total)
    acc = 0
    for name, w in roster:
        acc += w
        if pick < acc:
            return name
    return roster[-1][0]


_NEWS_SHAPES = [
    "{a} {b} near {P} as {c} {d}",
    "{a} {b} in {P}, officials say {c} {d}",
    "{O} confirms {a} {b} after {c} in {P}",
    "reports of {a} {b} as {O} responds near {P}",
    "{a} {b}: {N} comments on {c} {d}",
    "{N} addresses {a} {b} during {c} in {P}",
    "{a} {b} {c} as {O} issues {d}",
    "latest on {a} in {P}: {b} {c} {d}",
]

_SHORT_TERM_THEMES = ("Crisis", "Politics", "Weather", "Law/Crime")


def news_account_text(rng, theme: str) -> str:
    words = _THEME_WORDS[theme]
    a, b, c, d = rng.sample(words, 4)
    shape = rng.choice(_NEWS_SHAPES)
    return shape.format(
        a=a, b=b, c=c, d=d,
        P=_weighted(rng, _PLACE_ROSTER),
        N=_weighted(rng, _PERSON_ROSTER),
        O=_weighted(rng, _ORG_ROSTER),
    )


def news_account_corpus(window: str = "long_term", size: int = 1500,
                        seed: int = 4100) -> list[str]:
    """Texts as posted by wire and agency accounts.

    The long-term window mixes all themes; the short-term window leans on
    the themes active in the most recent month. Both share one entity
    roster so the two object tables agree on who matters.
    """
    rng = random.Random(seed + (0 if window == "long_term" else 811))
    themes = list(_THEME_WORDS) if window == "long_term" else list(_SHORT_TERM_THEMES)
    out = []
    for i in range(size):
        theme = themes[i % len(themes)] if rng.random() < 0.8 else rng.choice(list(_THEME_WORDS))
        out.append(news_account_text(rng, theme))
    return out


def two_theme_corpus(n_docs: int = 600, seed: int = 3700) -> tuple[list[str], list[int]]:
    """Docs drawn from two disjoint vocabularies, for topic separation checks."""
    rng = random.Random(seed)
    pools = (_THEME_WORDS["Crisis"], _THEME_WORDS["Sports"])
    texts, labels = [], []
    for i in range(n_docs):
        which = i % 2
        k = rng.randrange(8, 13)
        words = [rng.choice(pools[which]) for _ in range(k)]
        texts.append(" ".join(words))
        labels.append(which)
    return texts, labels


# ---------------------------------------------------------------------------
# graded clusters (ranking-model training and evaluation)

_CHAT_POOL = [t for t in _CHAT if "{" not in t]
_MID_ENTITIES = ["Portland", "Denver", "Seattle", "Red Cross", "Elon Musk",
                 "Bernie Sanders", "NASA", "Reuters"]


def _chat_text(rng) -> str:
    return rng.choice(_CHAT_POOL)


def graded_cluster_corpus(seed: int = 4400, n_per_grade: int = 60):
    """Clusters labeled 0 (chatter), 1 (local interest), 2 (headline news).

    Returns list of (EventCluster, grade). Grade tracks the three things
    the ranking model sees: how newsy the language is, which entities
    appear, and how many tweets piled on.
    """
    from newswire.model import EventCluster

    rng = random.Random(seed)
    specs: list[tuple[int, int, str]] = []
    for g in range(3):
        for _ in range(n_per_grade):
            if g == 2:
                size = rng.randrange(40, 90)
            elif g == 1:
                size = rng.randrange(10, 40)
            else:
                size = rng.randrange(3, 12)
            specs.append((g, size, f"g{g}"))
    rng.shuffle(specs)

    all_tweets: list[list[Tweet]] = []
    grades: list[int] = []
    base = 0.0
    for ci, (g, size, _tag) in enumerate(specs):
        theme = rng.choice(list(_THEME_WORDS))
        tweets = []
        for j in range(size):
            if g == 2:
                text = news_account_text(rng, theme)
                kind = "news" if rng.random() < 0.5 else "org"
            elif g == 1:
                if rng.random() < 0.5:
                    words = rng.sample(_THEME_WORDS[theme], 4)
                    ent = rng.choice(_MID_ENTITIES)
                    text = f"{words[0]} {words[1]} near {ent} {words[2]} {words[3]}"
                else:
                    text = _chat_text(rng) + " " + rng.choice(_THEME_WORDS[theme])
                kind = "person"
            else:
                text = _chat_text(rng)
                kind = "person"
            at = base + j * rng.uniform(5, 60)
            tweets.append(_mk(rng, text, at, kind=kind,
                              tid=f"gr{ci:03d}t{j:03d}"))
        base += 400.0
        all_tweets.append(tweets)
        grades.append(g)

    flat = [t for group in all_tweets for t in group]
    vectors, _df = corpus_vectors(flat)
    out = []
    for group, g in zip(all_tweets, grades):
        cluster = EventCluster(group[0].id.split("t")[0], group[0].created_at)
        for t in group:
            cluster.add(t, vectors[t.id])
        out.append((cluster, g))
    return out


# ---------------------------------------------------------------------------
# labeled truth/rumor clusters (veracity training and evaluation)

_V_EVENTS = [
    "explosion reported near the {place} port crews responding",
    "train derailment outside {place} station tracks closed",
    "large fire at a {place} warehouse smoke visible downtown",
    "flooding closes the main highway near {place} after heavy rain",
    "power outage across {place} after substation failure",
    "building partially collapsed on a {place} street overnight",
    "chemical leak at a {place} plant perimeter sealed",
    "aircraft made an emergency landing at the {place} airport",
]
_V_PLACES = ["houston", "chicago", "denver", "boston", "seattle", "dallas",
             "portland", "miami"]
_V_SUPPORT = [
    "officials confirmed the incident and crews remain on scene",
    "police confirm the report update expected within the hour",
    "statement released by the city this is confirmed",
    "just confirmed by the fire department road closures in effect",
]
_V_NEGATION = [
    "this is a hoax do not share it",
    "fact check: false no such incident occurred today",
    "the story was debunked there is no evidence of this",
    "this photo is fake it did not happen here",
]
_V_QUESTION = [
    "is this real? seeing conflicting reports",
    "can anyone confirm what is happening",
    "wait what is going on over there?",
    "source? nothing on the local news yet",
]
_V_GOSSIP = [
    "omg i heard something huge just happened!!",
    "my friend said the whole block is gone i cannot believe it!!",
    "i swear we heard a massive boom WOW!!",
    "someone told me they saw it with their own eyes!!",
]
_V_WITNESS = [
    "loud blast heard from my office building windows shook",
    "smoke rising over the skyline near the bridge",
    "sirens heading toward the waterfront right now",
    "traffic stopped in both directions emergency vehicles passing",
]
_V_WITNESS_EXCITED = [
    "huge boom just now windows rattled!!",
    "wow massive smoke column over downtown!!",
]
# satire and fabricated stories often read deadpan; the cited domain is
# what gives them away
_V_DEADPAN_FAKE = [
    "scientists report the {place} river now flows backwards",
    "city of {place} to replace all roads with trampolines",
    "study finds {place} pigeons organizing into a union",
    "mayor of {place} announces weather will be canceled",
]

VERACITY_GRADES = ("true", "likely_true", "likely_false", "false")


def _rt_of(rng, src: Tweet, offset_s: float) -> Tweet:
    return _mk(rng, f"RT @{src.author.handle}: {src.text}", offset_s,
               retweet_of=src.id)


def veracity_corpus(seed: int = 5100, n_per_grade: int = 40):
    """Labeled clusters at developing size with the full ingest index.

    Returns (cases, index): cases are (cluster, grade) with size >= 30;
    the first three tweets form the early view. Grade drives the source
    account, the cited domain, and the belief mix that later tweets carry.
    """
    from newswire.model import EventCluster
    from newswire.veracity import CorpusIndex

    rng = random.Random(seed)
    plans = [g for g in VERACITY_GRADES for _ in range(n_per_grade)]
    rng.shuffle(plans)

    groups: list[tuple[list[Tweet], str]] = []
    base = 0.0
    for ci, grade in enumerate(plans):
        place = rng.choice(_V_PLACES)
        event = rng.choice(_V_EVENTS).format(place=place)
        tweets: list[Tweet] = []
        at = base

        def witness_text():
            if rng.random() < 0.25:
                return rng.choice(_V_WITNESS_EXCITED) + " " + place
            return rng.choice(_V_WITNESS) + " " + place

        if grade == "true":
            if rng.random() < 0.4:  # wire account posting with no link yet
                src = _mk(rng, event + " updates to follow", at, kind="news")
            else:
                src = _mk(rng, event + " updates to follow", at, kind="news",
                          urls=(f"https://reuters.com/story/{ci}",))
        elif grade == "likely_true":
            if rng.random() < 0.5:
                src = _mk(rng, event, at, kind="org")
            else:
                witness = UserRef(user_id=f"w{ci}", handle=f"witness{ci}",
                                  verified=False,
                                  followers=rng.randrange(300, 30000))
                src = _mk(rng, witness_text(), at, user=witness)
        elif grade == "likely_false":
            gossip = UserRef(user_id=f"g{ci}", handle=f"rumorfan{ci}",
                             verified=False, followers=rng.randrange(30, 5000))
            src = _mk(rng, rng.choice(_V_GOSSIP), at, user=gossip)
        else:  # false: satire or fabricated-news site citation
            domain = rng.choice(["theonion.com", "nationalreport.net"])
            shocker = UserRef(user_id=f"f{ci}", handle=f"viralbuzz{ci}",
                              verified=False, followers=rng.randrange(100, 5000))
            if rng.random() < 0.5:
                body = rng.choice(_V_DEADPAN_FAKE).format(place=place)
            else:
                body = event.upper() + " SHARE THIS!!"
            src = _mk(rng, body, at, user=shocker,
                      urls=(f"http://{domain}/post/{ci}",))
        tweets.append(src)

        size = rng.randrange(32, 45)
        for j in range(1, size):
            at += rng.uniform(10, 90)
            roll = rng.random()
            if grade == "true":
                if roll < 0.45:
                    tweets.append(_rt_of(rng, src, at))
                elif roll < 0.70:
                    tweets.append(_mk(rng, rng.choice(_V_SUPPORT), at,
                                      kind="org" if rng.random() < 0.6 else "news"))
                else:
                    tweets.append(_mk(rng, witness_text(), at))
            elif grade == "likely_true":
                if roll < 0.30:
                    tweets.append(_rt_of(rng, src, at))
                elif roll < 0.50:
                    tweets.append(_mk(rng, rng.choice(_V_SUPPORT), at, kind="org"))
                elif roll < 0.60:
                    tweets.append(_mk(rng, rng.choice(_V_QUESTION), at))
                else:
                    tweets.append(_mk(rng, witness_text(), at))
            elif grade == "likely_false":
                if roll < 0.35:
                    tweets.append(_rt_of(rng, src, at))
                elif roll < 0.70:
                    tweets.append(_mk(rng, rng.choice(_V_QUESTION), at))
                elif roll < 0.85:
                    tweets.append(_mk(rng, rng.choice(_V_GOSSIP), at))
                else:
                    tweets.append(_mk(rng, rng.choice(_V_NEGATION), at,
                                      kind="news" if rng.random() < 0.4 else "person"))
            else:
                if roll < 0.35:
                    tweets.append(_rt_of(rng, src, at))
                elif roll < 0.55:
                    tweets.append(_mk(rng, rng.choice(_V_GOSSIP), at))
                else:
                    tweets.append(_mk(rng, rng.choice(_V_NEGATION), at,
                                      kind="news" if rng.random() < 0.5 else "org"))
        base += 9000.0
        groups.append((tweets, grade))

    flat = [t for ts, _ in groups for t in ts]
    vectors, _df = corpus_vectors(flat)
    index = CorpusIndex()
    for t in flat:
        index.add(t)

    cases = []
    for ci, (ts, grade) in enumerate(groups):
        cluster = EventCluster(f"vc-{ci:04d}", ts[0].created_at)
        for t in ts:
            cluster.add(t, vectors[t.id])
        cases.append((cluster, grade))
    return cases, index


def early_view(cluster, n: int = 3):
    """First n tweets as their own cluster (the just-born view)."""
    from newswire.model import EventCluster

    members = sorted(cluster.tweets, key=lambda t: (t.created_at, t.id))[:n]
    young = EventCluster(cluster.cluster_id + f"-e{n}", members[0].created_at)
    for t in members:
        young.add(t, cluster.vectors[t.id])
    return young


def topical_corpus(seed: int = 4700, per_label: int = 120):
    """(tweet, label value) pairs for the topic labeler, one vocabulary per
    label plus an out-of-theme remainder."""
    from newswire.model import TopicLabel

    rng = random.Random(seed)
    out = []
    offset = 0.0
    for label in TopicLabel:
        for _ in range(per_label):
            offset += rng.random() * 2
            if label is TopicLabel.OTHER:
                words = rng.sample(_wordlist(), 6)
                text = " ".join(words)
                out.append((_mk(rng, text, offset), label.value))
            else:
                out.append((_mk(rng, news_account_text(rng, label.value), offset),
                            label.value))
    rng.shuffle(out)
    return out


# -- labeled scope snippets ------------------------------------------------

_IMPACT_LOW = [
    ("small kitchen fire at a {city} restaurant, no injuries", "Crisis"),
    ("apartment fire on elm street quickly contained, no injuries reported", "Crisis"),
    ("minor traffic accident near downtown {city}, brief delays", "Crisis"),
    ("police respond to false alarm at {city} mall", "Law/Crime"),
    ("shoplifting arrest at a {city} store", "Law/Crime"),
    ("vandalism reported at {city} park, no damage to structures", "Law/Crime"),
    ("magnitude {m_low} quake recorded offshore, no damage", "Crisis"),
    ("brush fire contained at {acres_low} acres", "Weather"),
    ("light hail in {city} this afternoon, no damage reported", "Weather"),
    ("power briefly out for {cust} customers in {city}", "Weather"),
    ("one injured in fender bender on highway {hwy}", "Crisis"),
    ("small grass fire near {city} put out within the hour", "Weather"),
]

_IMPACT_MED = [
    ("explosion at an oil pipeline near {city}", "Crisis"),
    ("chemical spill at {city} refinery, {inj_med} injured", "Crisis"),
    ("wildfire grows to {acres_med} acres near {city}", "Weather"),
    ("magnitude {m_med} earthquake shakes {city}, minor damage", "Crisis"),
    ("{inj_med} injured after bus crash on the interstate", "Crisis"),
    ("armed robbery at {city} bank, suspect at large", "Law/Crime"),
    ("storm damages {homes_med} homes across {city} county", "Weather"),
    ("train derailed outside {city}, hazmat crews on scene", "Crisis"),
    ("{dead_med} dead after shooting in {city} parking lot", "Law/Crime"),
    ("flooding closes roads across {city}, dozens evacuated", "Weather"),
    ("refinery fire sends smoke over {city}, {inj_med} hurt", "Crisis"),
    ("gas leak forces evacuation of {city} school, {inj_med} hospitalized", "Crisis"),
]

_IMPACT_HIGH = [
    ("{m_high} magnitude earthquake hits {city}, {dead_high} dead", "Crisis"),
    ("hurricane makes landfall near {city}, {miss_high} missing", "Weather"),
    ("wildfire burns {acres_high} acres, {homes_high} homes destroyed", "Weather"),
    ("bombing at {city} market kills {dead_high}", "Law/Crime"),
    ("train derailment kills {dead_mid} outside {city}", "Crisis"),
    ("${bn} billion in damages after floods swamp {city}", "Weather"),
    ("massacre leaves {dead_high} dead in {city}", "Law/Crime"),
    ("tsunami warning after magnitude {m_high} quake off {city}", "Crisis"),
    ("explosion levels {city} building, {dead_mid} dead, {inj_high} injured", "Crisis"),
    ("tornado tears through {city}, {dead_mid} killed, {homes_high} homes gone", "Weather"),
]


def _impact_fill(rng, tpl):
    return tpl.format(
        city=rng.choice(_CITIES),
        hwy=rng.randint(5, 99),
        cust=rng.randint(40, 400),
        m_low=round(rng.uniform(2.0, 3.4), 1),
        m_med=round(rng.uniform(4.5, 5.8), 1),
        m_high=round(rng.uniform(6.5, 8.3), 1),
        acres_low=rng.randint(2, 40),
        acres_med=rng.randint(300, 3000),
        acres_high=rng.randint(10000, 90000),
        inj_med=rng.randint(3, 9),
        inj_high=rng.randint(20, 120),
        dead_med=rng.randint(1, 3),
        dead_mid=rng.randint(8, 30),
        dead_high=rng.randint(12, 200),
        miss_high=rng.randint(10, 80),
        homes_med=rng.randint(5, 30),
        homes_high=rng.randint(100, 900),
        bn=rng.randint(1, 20),
    )


def impact_snippets(seed: int = 5600, n_per_level: int = 180):
    """(text, topic value, level) rows for the scope classifier."""
    rng = random.Random(seed)
    out = []
    for level, pool in (("low", _IMPACT_LOW), ("medium", _IMPACT_MED),
                        ("high", _IMPACT_HIGH)):
        for _ in range(n_per_level):
            tpl, topic = rng.choice(pool)
            out.append((_impact_fill(rng, tpl), topic, level))
    rng.shuffle(out)
    return out


# ---------------------------------------------------------------------------
# ---------------------------------------------------------------------------
# desk replay: planted stories plus a labeled reference set

_OUTLETS = [
    ("Newsline Wire", "wire"),
    ("Global Press Service", "wire"),
    ("City Desk Seven", "local"),
    ("Metro Tribune", "local"),
    ("Harbor Gazette", "local"),
    ("Civic Alert Office", "official"),
]

# none of these overlap the cities the noise templates draw from
_DESK_CITIES_DOM = [
    "Lubbock", "Spokane", "Knoxville", "Memphis", "Tulsa", "Oakland",
    "Boise", "Tampa", "Wichita", "Reno", "Savannah", "Dayton",
    "Omaha", "Tucson",
]
_DESK_CITIES_INTL = [
    "Manchester", "Lyon", "Osaka", "Valparaiso", "Gdansk", "Durban",
    "Izmir", "Recife", "Pune", "Galway",
]

# locale marks are assigned one per story, so two stories of the same kind
# never share their rarest tokens
_MARK_FIRST = [
    "alder", "granite", "beacon", "cedar", "willow", "copper", "summit",
    "juniper", "laurel", "magnolia", "pioneer", "quarry", "sterling",
    "tamarack", "vestal", "windrow", "bluffton", "crescent", "dunmore",
    "elkhart", "fairhaven", "grover", "hollis", "ironwood",
]
_MARK_SECOND = [
    "road", "yard", "pier", "works", "junction", "basin", "gate",
    "spur", "strip", "wash",
]

# Each story kind: a core sentence echoed by every report (so three reports
# form a unit) plus short rotating tails. Core wording deliberately avoids
# the stock phrases the background noise templates use.
_DESK_KINDS = [
    dict(
        slug="warehouse-fire", expected=False, grade="newsworthy", veracity="true",
        headline="Warehouse fire burning at {mark} in {city}, {inj} injured",
        core="big warehouse fire burning at {mark} in {city} heavy smoke over the block",
        tails=["right now", "avoid the area", "{inj} hurt reported", "more engines arriving",
               "roof just collapsed", "whole street closed", "photos coming in",
               "officials on scene", "second alarm called", "visible from downtown"],
    ),
    dict(
        slug="earthquake", expected=False, grade="newsworthy", veracity="true",
        headline="Strong quake near {mark} rattles {city}",
        core="strong quake felt across {city} epicenter near {mark} buildings swayed",
        tails=["just felt it wow", "stuff fell off shelves", "lasted a long time",
               "aftershock just hit", "seismic office confirms", "no damage word yet",
               "lights flickered here", "longest shaking in years", "everyone outside now",
               "phones all buzzing"],
    ),
    dict(
        slug="derailment", expected=False, grade="newsworthy", veracity="true",
        headline="Freight cars off the rails near {mark} in {city}",
        core="freight cars off the rails near {mark} in {city} the line is blocked",
        tails=["crossing closed", "tank cars tipped", "no leaks reported yet", "{cnt} cars counted",
               "responders staging", "big mess out there", "hazmat on standby", "seeing it from the road",
               "officials confirm", "cleanup will take days"],
    ),
    dict(
        slug="flash-flood", expected=False, grade="newsworthy", veracity="true",
        headline="Flash flooding swamps {mark} in {city}, rescues under way",
        core="flash flooding at {mark} in {city} water rising fast rescues under way",
        tails=["roads impassable", "cars stalled out", "{cnt} calls so far", "creek over its banks",
               "underpass swamped", "stay home tonight", "sirens everywhere", "never seen it like this",
               "boat teams out", "warning just extended"],
    ),
    dict(
        slug="factory-blast", expected=False, grade="newsworthy", veracity="true",
        headline="Blast at {mark} plant in {city}, {inj} hurt",
        core="large blast at the {mark} plant in {city} smoke pouring from the site",
        tails=["windows shook here", "{inj} workers hurt", "heard it across town", "second bang just now",
               "evacuations under way", "saw the flash", "gas line suspected", "officials on site",
               "plant shut down", "ambulances lined up"],
    ),
    dict(
        slug="outage", expected=False, grade="partially_newsworthy", veracity="true",
        headline="Substation fault blacks out {mark} grid in {city}",
        core="lights out across the {mark} grid in {city} substation fault repair trucks rolling",
        tails=["traffic signals dead", "whole area dark", "{cnt} thousand affected", "generators kicking on",
               "flickered twice then died", "repair eta unknown", "grid operator confirms",
               "second feeder tripped", "hospitals on backup", "neighbors all outside"],
    ),
    dict(
        slug="tanker-collision", expected=False, grade="newsworthy", veracity="true",
        headline="Tanker strikes barge off {mark} near {city}",
        core="tanker struck a barge off {mark} near {city} channel closed tugs on scene",
        tails=["no spill confirmed yet", "harbor traffic stopped", "barge taking on water",
               "coast guard aboard", "hull being assessed", "watching from shore",
               "officials brief soon", "salvage team called", "pilots rerouted", "slow going out there"],
    ),
    dict(
        slug="bridge-closure", expected=False, grade="partially_newsworthy", veracity="true",
        headline="Cracked girder closes {mark} bridge in {city}",
        core="the {mark} bridge in {city} closed after inspectors found a cracked girder",
        tails=["both directions shut", "traffic is a nightmare", "detour adds an hour",
               "engineers swarming it", "closed until further notice", "avoid the crossing",
               "repair timeline unknown", "transit rerouted", "officials confirm", "commute ruined"],
    ),
    dict(
        slug="wildfire", expected=False, grade="newsworthy", veracity="true",
        headline="Wildfire near {mark} forces evacuations outside {city}",
        core="wildfire spreading near {mark} outside {city} evacuations ordered smoke over the valley",
        tails=["{cnt} homes emptied", "air tankers working it", "it jumped the road",
               "ash falling in town", "ridge fully involved", "wind driving it hard",
               "shelters opening", "officials brief at noon", "growing fast", "glow visible tonight"],
    ),
    dict(
        slug="building-collapse", expected=False, grade="newsworthy", veracity="true",
        headline="Apartment collapse at {mark} in {city}, rescue under way",
        core="partial apartment collapse at {mark} in {city} rescue teams digging through rubble",
        tails=["dust cloud over the block", "{inj} pulled out so far", "search dogs arriving",
               "a floor pancaked", "gas was shut before", "crowd gathering", "cranes on the way",
               "officials on scene", "residents evacuated", "cause unclear"],
    ),
    dict(
        slug="pipeline-spill", expected=False, grade="newsworthy", veracity="true",
        headline="Pipeline leak spills crude near {mark} in {city}",
        core="pipeline leak spilling crude near {mark} in {city} cleanup teams booming the creek",
        tails=["strong oil smell", "{cnt} hundred barrels estimated", "line shut down",
               "contractors staging", "it reached the waterline", "state inspectors on site",
               "wildlife teams called", "officials confirm", "containment holding", "source isolated"],
    ),
    dict(
        slug="protest-march", expected=False, grade="partially_newsworthy", veracity="true",
        headline="Large march fills {mark} in {city}",
        core="large march filling {mark} in {city} crowd growing streets closed around it",
        tails=["drums and banners", "{cnt} thousand claimed", "five blocks long", "peaceful so far",
               "chants echoing", "organizers speaking now", "buses rerouted",
               "heading downtown", "officials monitoring", "biggest in years"],
    ),
    dict(
        slug="verdict", expected=True, grade="newsworthy", veracity="true",
        headline="Jury returns verdict in {mark} fraud trial in {city}",
        core="jury verdict in the {mark} fraud trial in {city} courtroom packed",
        tails=["guilty on main counts", "defense stone faced", "appeal expected",
               "crowd outside reacting", "months of testimony done", "reading took two minutes",
               "sentencing set later", "lawyers speaking soon", "reporters sprinting out", "case closed"],
    ),
    dict(
        slug="rocket-launch", expected=True, grade="newsworthy", veracity="true",
        headline="Cargo rocket lifts off from {mark} pad near {city}",
        core="cargo rocket off the {mark} pad near {city} climbing clean",
        tails=["rumble rolling in", "crowd cheering", "stage separation confirmed", "looked flawless",
               "contrail hanging overhead", "scrub streak over", "booster coming back",
               "visible across town", "orbit confirmed", "payload healthy"],
    ),
    dict(
        slug="rate-decision", expected=True, grade="newsworthy", veracity="true",
        headline="Central bank in {city} holds {mark} rate steady",
        core="central bank in {city} holds the {mark} rate steady statement out",
        tails=["right on forecast", "markets barely moved", "two dissents in the vote",
               "presser starting", "guidance unchanged", "economists split on next move",
               "as expected", "path stays flat", "questions under way", "next meeting eyed"],
    ),
    dict(
        slug="cup-final", expected=True, grade="partially_newsworthy", veracity="true",
        headline="{city} wins {mark} cup final in extra time",
        core="{city} wins the {mark} cup final in extra time late winner",
        tails=["scenes downtown", "trophy lift under way", "fans flooding the square",
               "best match in years", "heartbreak for the visitors", "what a finish",
               "city erupts", "parade planned", "record crowd", "unbelievable night"],
    ),
    dict(
        slug="election-tally", expected=True, grade="newsworthy", veracity="true",
        headline="Final {mark} ballot count certified in {city}",
        core="final count certified for the {mark} ballot in {city} result official",
        tails=["measure passes", "turnout record set", "margin around {cnt} hundred votes",
               "recount unlikely", "candidates reacting", "long night at the count",
               "observers satisfied", "maps updating", "statement expected", "challenges dropped"],
    ),
    dict(
        slug="death-hoax", expected=False, grade="partially_newsworthy", veracity="false",
        headline="Rumor says {mark} star died in {city}, no confirmation",
        core="rumor says the {mark} star died in {city} no outlet confirms it",
        tails=["seeing it everywhere", "same photo from 2011", "account is brand new",
               "please stop sharing", "family rep denies", "smells like a hoax",
               "recycled from last year", "zero reputable sources", "rip trending anyway", "classic fake"],
    ),
    dict(
        slug="shark-photo", expected=False, grade="not_newsworthy", veracity="likely_false",
        headline="Shark photo from {mark} flood in {city} debunked",
        core="viral shark photo from the {mark} flood in {city} looks fake same picture every storm",
        tails=["reverse image searched it", "photoshopped classic", "flood is real shark is not",
               "local desk says no sightings", "stop it", "right on schedule",
               "pic is from 2012", "debunked already", "officials deny", "why do people share this"],
    ),
]


def _desk_fill(rng, tpl, city, mark):
    return tpl.format(
        city=city, mark=mark,
        inj=rng.randint(2, 14),
        mag=round(rng.uniform(4.6, 6.4), 1),
        cnt=rng.randint(3, 40),
    )


def desk_scenario(seed: int = 8800, n_events: int = 200, n_noise: int = 45000,
                  horizon_h: float | None = None, warmup_s: float = 1800.0):
    """Planted stories in a noise stream, with the reference rows to score them.

    Returns (gold_rows, tweets, truth) where gold_rows are JSON dicts
    describing each planted story, tweets is the full stream in time order,
    and truth maps event_id -> the planted tweet ids. The first story waits
    out a warmup so term statistics exist before anything must cluster.
    The default horizon keeps two stories of the same kind farther apart
    than the 12 h cluster idle window, so they cannot merge.
    """
    rng = random.Random(seed)
    if horizon_h is None:
        horizon_h = max(48.0, 12.75 * n_events / len(_DESK_KINDS))
    slot_s = (horizon_h * 3600.0 - warmup_s) / max(n_events, 1)
    marks = [f"{a} {b}" for a in _MARK_FIRST for b in _MARK_SECOND]
    rng.shuffle(marks)

    gold_rows, planted, truth = [], [], {}
    for e in range(n_events):
        kind = _DESK_KINDS[e % len(_DESK_KINDS)]
        domestic = rng.random() < 0.6
        city = rng.choice(_DESK_CITIES_DOM if domestic else _DESK_CITIES_INTL)
        mark = marks[e % len(marks)]
        t0 = warmup_s + e * slot_s + rng.uniform(0.0, slot_s * 0.5)
        event_id = f"gold-{e:04d}"

        # witness reports trail the moment itself by half a minute or more;
        # a burst echoes one core phrasing, so reports stay mutually similar
        n_tweets = rng.randint(6, 10)
        core = _desk_fill(rng, kind["core"], city, mark)
        tails = rng.sample(kind["tails"], min(n_tweets, len(kind["tails"])))
        t = t0 + rng.uniform(30.0, 120.0)
        ids = []
        for tail in tails:
            text = core + " " + _desk_fill(rng, tail, city, mark)
            if rng.random() < 0.25:
                text = rng.choice(("breaking:", "update:", "happening now")) + " " + text
            user_kind = "person" if rng.random() < 0.55 else ("news" if rng.random() < 0.6 else "org")
            tw = _mk(rng, text, t, kind=user_kind)
            planted.append(tw)
            ids.append(tw.id)
            if rng.random() < 0.2:
                planted.append(_rt_of(rng, tw, t + rng.uniform(5.0, 40.0)))
            t += rng.uniform(15.0, 90.0)
        truth[event_id] = ids

        # newsrooms beat the crowd on scheduled stories, trail on surprises
        n_outlets = rng.randint(1, 3)
        headlines = []
        for outlet, _otype in rng.sample(_OUTLETS, n_outlets):
            if kind["expected"]:
                delay = rng.uniform(-120.0, 240.0)
            else:
                delay = rng.uniform(480.0, 2100.0)
            stamp = None if rng.random() < 0.04 else _ts(t0 + delay)
            headlines.append({"outlet": outlet,
                              "timestamp": format_ts(stamp) if stamp else None})
        first = min((h for h in headlines if h["timestamp"]), key=lambda h: h["timestamp"], default=None)
        src = next((ot for o, ot in _OUTLETS if first and o == first["outlet"]), "unstamped")

        gold_rows.append({
            "event_id": event_id,
            "description": _desk_fill(random.Random(seed + e), kind["headline"], city, mark),
            "true_time": format_ts(_ts(t0)),
            "headlines": headlines,
            "newsworthiness": kind["grade"],
            "veracity": kind["veracity"],
            "categories": ["expected" if kind["expected"] else "unexpected",
                           "domestic" if domestic else "international",
                           f"src:{src}"],
        })

    noise = []
    if n_noise:
        raw = noise_corpus(size=n_noise, seed=seed + 3)
        stretch = horizon_h * 3600.0 / max((raw[-1][0].created_at - EPOCH).total_seconds(), 1.0)
        from dataclasses import replace
        for tw, _label in raw:
            off = (tw.created_at - EPOCH).total_seconds() * stretch
            noise.append(replace(tw, created_at=_ts(off)))

    tweets = sorted(planted + noise, key=lambda t: (t.created_at, t.id))
    return gold_rows, tweets, truth
