"""Shared fixtures: synthetic schema-guided corpora and template packs."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

# ---------------------------------------------------------------------------
# building blocks for corpus JSON files


def slot(name, description="", possible_values=None):
    obj = {"name": name, "description": description}
    if possible_values is not None:
        obj["possible_values"] = possible_values
    return obj


def service_schema(name, slots, domain=None):
    obj = {"service_name": name, "slots": slots}
    if domain is not None:
        obj["domain"] = domain
    return obj


def action(act, slot=None, values=()):
    obj = {"act": act}
    if slot is not None:
        obj["slot"] = slot
    if values:
        obj["values"] = list(values)
    return obj


def user(utterance):
    return {"speaker": "USER", "utterance": utterance}


def system(utterance, service, actions):
    return {
        "speaker": "SYSTEM",
        "utterance": utterance,
        "frames": [{"service": service, "actions": actions}],
    }


def dialogue(dialogue_id, services, turns):
    return {"dialogue_id": dialogue_id, "services": services, "turns": turns}


def write_partition(part_dir: Path, schemas, dialogues, chunk=50):
    part_dir.mkdir(parents=True, exist_ok=True)
    (part_dir / "schema.json").write_text(json.dumps(schemas, indent=1))
    for i in range(0, max(len(dialogues), 1), chunk):
        batch = dialogues[i : i + chunk]
        name = f"dialogues_{i // chunk + 1:03d}.json"
        (part_dir / name).write_text(json.dumps(batch, indent=1))


# ---------------------------------------------------------------------------
# the restaurant example used across encoder tests

RESTAURANTS_SCHEMA = service_schema(
    "Restaurants_1",
    [
        slot("restaurant", "name of restaurant"),
        slot("cuisine", "type of food served"),
        slot("has_live_music", "whether live music is played", ["True", "False"]),
        slot("price", "average price per person"),
    ],
)

RESTAURANTS_TEMPLATES = """\
service: Restaurants_1
inform(restaurant=$x): How about the restaurant $x.
inform(cuisine=$x): The restaurant serves $x food.
inform(has_live_music=$x): The live music answer is $x.
inform(price=$x): The average price is $x per person.
request(cuisine): What kind of food are you looking for?
goodbye: Have a nice day!
"""

RIDESHARE_SCHEMA = service_schema(
    "RideSharing_1",
    [
        slot("dest", "destination of the ride"),
        slot("shared", "whether the ride is shared", ["True", "False"]),
        slot("fare", "total cost of the ride"),
        slot("seats", "number of seats reserved"),
    ],
)

RIDESHARE_TEMPLATES = """\
service: RideSharing_1
notify_success: Your ride is booked and the cab is on its way.
goodbye: Have a safe ride!
request(dest): Where are you riding to?
request(shared): Are you comfortable sharing the ride?
confirm(dest=$x): You are going to $x.
inform(fare=$x): Your ride costs $x dollars.
inform(seats=$x): The cab is for $x riders.
inform(shared=$x): The ride sharing answer is $x.
confirm_prefix: Please confirm the following details:
"""


@pytest.fixture()
def template_dir(tmp_path):
    d = tmp_path / "templates"
    d.mkdir()
    (d / "restaurants.templates").write_text(RESTAURANTS_TEMPLATES)
    (d / "rideshare.templates").write_text(RIDESHARE_TEMPLATES)
    return d


@pytest.fixture()
def small_corpus(tmp_path):
    """Two-service corpus: enough to exercise loading, splits and eval."""
    root = tmp_path / "corpus"
    train = [
        dialogue(
            "t_001",
            ["Restaurants_1"],
            [
                user("Find me a greek place"),
                system(
                    "How about Opa! serving greek food?",
                    "Restaurants_1",
                    [
                        action("INFORM", "restaurant", ["Opa!"]),
                        action("INFORM", "cuisine", ["greek"]),
                    ],
                ),
                user("Sounds good, thanks"),
                system("Have a nice day!", "Restaurants_1", [action("GOODBYE")]),
            ],
        ),
        dialogue(
            "t_002",
            ["RideSharing_1"],
            [
                user("Book me a cab to Berkeley"),
                system(
                    "You are going to Berkeley for $23.",
                    "RideSharing_1",
                    [
                        action("CONFIRM", "dest", ["Berkeley"]),
                        action("INFORM", "fare", ["$23"]),
                    ],
                ),
                user("Perfect"),
                system(
                    "Your ride is booked and the cab is on its way.",
                    "RideSharing_1",
                    [action("NOTIFY_SUCCESS")],
                ),
            ],
        ),
        dialogue(
            "t_003",
            ["Restaurants_1", "RideSharing_1"],
            [
                user("Greek food then a cab"),
                system(
                    "What kind of food are you looking for?",
                    "Restaurants_1",
                    [action("REQUEST", "cuisine")],
                ),
            ],
        ),
    ]
    dev = [
        dialogue(
            "d_001",
            ["Restaurants_1"],
            [
                user("Anything cheap?"),
                system(
                    "The average price is $15 per person.",
                    "Restaurants_1",
                    [action("INFORM", "price", ["$15"])],
                ),
            ],
        ),
    ]
    test = [
        dialogue(
            "e_001",
            ["RideSharing_1"],
            [
                user("Cab for two to Alameda please"),
                system(
                    "The cab is for 2 riders. Where are you riding to?",
                    "RideSharing_1",
                    [
                        action("INFORM", "seats", ["2"]),
                        action("REQUEST", "dest"),
                    ],
                ),
                user("Alameda, and no sharing"),
                system(
                    "The live music answer is False. Have a safe ride!",
                    "RideSharing_1",
                    [
                        action("INFORM", "shared", ["False"]),
                        action("GOODBYE"),
                    ],
                ),
            ],
        ),
    ]
    both = [RESTAURANTS_SCHEMA, RIDESHARE_SCHEMA]
    write_partition(root / "train", both, train)
    write_partition(root / "dev", [RESTAURANTS_SCHEMA], dev)
    write_partition(root / "test", [RIDESHARE_SCHEMA], test)
    return root


# ---------------------------------------------------------------------------
# a 14-domain corpus for the k-shot sampler

FOURTEEN_DOMAINS = [
    "Restaurants",
    "Hotels",
    "Flights",
    "Buses",
    "Media",
    "Movies",
    "Music",
    "Homes",
    "RideSharing",
    "Services",
    "Travel",
    "Events",
    "RentalCars",
    "Calendar",
]

UNSEEN_DOMAINS = ["Weather", "Trains", "Alarm", "Messaging"]

ACT_POOL = ["inform", "request", "confirm", "offer", "notify_success", "goodbye"]


def _domain_dialogues(rng, domain, service, slot_names, n_dialogues, id_prefix):
    """Deterministic dialogues whose acts/slots need a genuine cover.

    Every feature is guaranteed to appear in one of the first four
    dialogues (so a cover of size <= 4 always exists); later dialogues
    carry random subsets.
    """
    features = [("act", a) for a in ACT_POOL] + [("slot", s) for s in slot_names]
    placed = {f: i % 4 for i, f in enumerate(features)}
    dialogues = []
    for i in range(n_dialogues):
        forced = [f for f, host in placed.items() if host == i]
        extras = [f for f in features if f not in forced and rng.random() < 0.3]
        wanted = forced + extras or [("act", "goodbye")]
        acts_wanted = [f[1] for f in wanted if f[0] == "act"]
        slots_wanted = [f[1] for f in wanted if f[0] == "slot"]
        value_verbs = [a for a in acts_wanted if a in ("inform", "offer", "confirm")]
        actions = []
        for j, s in enumerate(slots_wanted):
            verb = value_verbs[j % len(value_verbs)] if value_verbs else "inform"
            actions.append(action(verb, s, [f"{s} value {i}"]))
        covered = {a["act"] for a in actions}
        for a in acts_wanted:
            if a in covered:
                continue
            if a in ("inform", "offer", "confirm"):
                s = rng.choice(slot_names)
                actions.append(action(a, s, [f"{s} value {i}"]))
            elif a == "request":
                actions.append(action(a, rng.choice(slot_names)))
            else:
                actions.append(action(a))
        # split the actions over one or two system turns
        cut = len(actions) // 2 if len(actions) > 3 else len(actions)
        turns = [
            user(f"user opening {domain} {i}"),
            system(f"reply one for {domain} {i}", service, actions[:cut]),
        ]
        if actions[cut:]:
            turns.append(user(f"user follow-up {domain} {i}"))
            turns.append(system(f"reply two for {domain} {i}", service, actions[cut:]))
        dialogues.append(dialogue(f"{id_prefix}_{i:03d}", [service], turns))
    return dialogues


def build_wide_corpus(root: Path, *, dialogues_per_domain=None, seed=1234):
    """A 14-train-domain corpus with 12 domains shared across splits and
    4 extra unseen domains in dev/test."""
    rng = random.Random(seed)
    schemas = {}
    for domain in FOURTEEN_DOMAINS + UNSEEN_DOMAINS:
        service = f"{domain}_1"
        slot_names = [f"{domain.lower()}_slot_{j}" for j in range(4)]
        slots = [slot(s, f"the {s.replace('_', ' ')}") for s in slot_names]
        slots.append(slot(f"{domain.lower()}_flag", "a yes/no property", ["True", "False"]))
        schemas[domain] = service_schema(service, slots, domain=domain)

    train_dialogues = []
    for d_idx, domain in enumerate(FOURTEEN_DOMAINS):
        service = f"{domain}_1"
        slot_names = [f"{domain.lower()}_slot_{j}" for j in range(4)]
        n = (
            dialogues_per_domain[domain]
            if dialogues_per_domain and domain in dialogues_per_domain
            else 6 + d_idx % 4
        )
        train_dialogues.extend(
            _domain_dialogues(rng, domain, service, slot_names, n, f"tr_{d_idx:02d}")
        )
    # two multi-domain dialogues that the single-domain filter must drop
    train_dialogues.append(
        dialogue(
            "tr_multi_000",
            ["Restaurants_1", "Hotels_1"],
            [
                user("multi domain opening"),
                system("multi reply", "Restaurants_1", [action("goodbye")]),
            ],
        )
    )
    train_dialogues.append(
        dialogue(
            "tr_multi_001",
            ["Buses_1", "Flights_1"],
            [
                user("another multi"),
                system("multi reply", "Buses_1", [action("notify_success")]),
            ],
        )
    )

    shared = FOURTEEN_DOMAINS[:12]
    dev_domains = shared + UNSEEN_DOMAINS[:2]
    test_domains = shared + UNSEEN_DOMAINS

    def eval_dialogues(domains, prefix):
        out = []
        for d_idx, domain in enumerate(domains):
            service = f"{domain}_1"
            slot_names = [f"{domain.lower()}_slot_{j}" for j in range(4)]
            out.extend(
                _domain_dialogues(
                    rng, domain, service, slot_names, 2, f"{prefix}_{d_idx:02d}"
                )
            )
        return out

    write_partition(
        root / "train",
        [schemas[d] for d in FOURTEEN_DOMAINS],
        train_dialogues,
    )
    write_partition(
        root / "dev", [schemas[d] for d in dev_domains], eval_dialogues(dev_domains, "dv")
    )
    write_partition(
        root / "test",
        [schemas[d] for d in test_domains],
        eval_dialogues(test_domains, "te"),
    )
    return root


def build_wide_templates(root: Path, corpus_root: Path):
    """Template packs covering every (act, slot, arity) key in a corpus."""
    from tgnlg.catalog import load_corpus
    from tgnlg.templates import corpus_coverage_keys

    root.mkdir(parents=True, exist_ok=True)
    partitions = load_corpus(corpus_root)
    keys_by_service = {}
    for partition in partitions.values():
        frames = (
            turn.frames[0]
            for d in partition.dialogues
            for _, turn in d.system_turns()
        )
        for key in corpus_coverage_keys(frames):
            keys_by_service.setdefault(key.service, set()).add(key)
    for service, keys in sorted(keys_by_service.items()):
        lines = [f"service: {service}", "confirm_prefix: Please confirm the following details:"]
        for key in sorted(keys, key=lambda k: k.sort_key()):
            if key.takes_value:
                lines.append(f"{key.act}({key.slot}=$x): The {key.slot.replace('_', ' ')} is $x.")
            elif key.slot is not None:
                lines.append(f"{key.act}({key.slot}): Tell me the {key.slot.replace('_', ' ')}.")
            else:
                lines.append(f"{key.act}: Acknowledged {key.act.replace('_', ' ')}.")
        (root / f"{service}.templates").write_text("\n".join(lines) + "\n")
    return root


@pytest.fixture(scope="session")
def wide_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("wide") / "corpus"
    return build_wide_corpus(root)


@pytest.fixture(scope="session")
def wide_templates(tmp_path_factory, wide_corpus):
    root = tmp_path_factory.mktemp("wide_templates") / "templates"
    return build_wide_templates(root, wide_corpus)
