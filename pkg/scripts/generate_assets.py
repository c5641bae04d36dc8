#!/usr/bin/env python3
"""Regenerate the bundled scenario and its golden fixture file.

The fixture file drives the deterministic reference run: Alex opens in Adult,
then the conversation settles into the rescue loop (Jordan's Child answered
by Alex's Parent) for the remaining turns. Run from the repo root:

    python3 scripts/generate_assets.py
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from transact.core import canonical_json  # noqa: E402

ASSETS = Path(__file__).resolve().parent.parent / "src" / "transact" / "assets"


def record(rid: str, context: str, reaction: str, emotions: list[str], tone: str, ego: str) -> dict:
    return {
        "id": rid,
        "context": context,
        "reaction": reaction,
        "emotions": emotions,
        "tone": tone,
        "ego_state": ego,
    }


def jordan_memories() -> dict[str, list[dict]]:
    parent = [
        ("An error turned up in paperwork I was responsible for",
         "Careless numbers are a disgrace. Proper people check every line twice.",
         ["disapproval"], "severe"),
        ("Someone handed in work past the deadline",
         "Deadlines are promises. Breaking one tells everyone what you are worth.",
         ["contempt"], "cold"),
        ("A mistake was discovered during an official review",
         "You own up at once and you apologize properly. No excuses, ever.",
         ["sternness"], "clipped"),
        ("I was tempted to skip double-checking a calculation",
         "Shortcuts are for lazy minds. Do it right or do not do it at all.",
         ["rigidity"], "lecturing"),
        ("A junior colleague asked how to handle criticism from above",
         "You stand straight, take the scolding, and never talk back to your betters.",
         ["duty"], "formal"),
        ("Choosing what to wear for a family gathering",
         "You dress properly for family occasions; appearances keep order.",
         ["propriety"], "prim"),
        ("Neighbors played loud music late in the evening",
         "Decent people keep quiet after ten. Rules exist for a reason.",
         ["irritation"], "huffy"),
        ("Deciding whether to spend a bonus or save it",
         "Money gets saved, not squandered. Waste is a moral failing.",
         ["frugality"], "firm"),
        ("A friend cancelled plans at the last minute",
         "You honor your word even when it is inconvenient. That is basic decency.",
         ["reproach"], "stiff"),
        ("Leaving dishes unwashed overnight",
         "A tidy kitchen is a tidy mind. Chores come before rest.",
         ["insistence"], "brisk"),
    ]
    adult = [
        ("Reviewing a financial report for calculation errors",
         "Recompute the totals from the source figures and compare line by line.",
         ["focus"], "matter-of-fact"),
        ("A spreadsheet formula produced an inconsistent sum",
         "Trace the cell references first; most errors are a shifted range.",
         ["curiosity"], "methodical"),
        ("Being asked to explain a discrepancy in quarterly numbers",
         "State what is known, what is unverified, and the next check to run.",
         ["composure"], "even"),
        ("Planning how to fix a mistake before a deadline",
         "Break the correction into steps and estimate each one before starting.",
         ["resolve"], "practical"),
        ("Deciding who should verify corrected figures",
         "A second pair of eyes catches what the author cannot; ask for review.",
         ["prudence"], "measured"),
        ("Choosing a faster route for the morning commute",
         "The bridge saves ten minutes outside of rush hour; take it before eight.",
         ["neutrality"], "flat"),
        ("Comparing two phone plans before renewing",
         "List the monthly costs and usage, then pick the cheaper fit.",
         ["detachment"], "plain"),
        ("Packing for a two-day work trip",
         "One bag, chargers first, documents in the outer pocket.",
         ["efficiency"], "dry"),
        ("Scheduling a dentist appointment around meetings",
         "Book the first morning slot; it never collides with stand-up.",
         ["order"], "neutral"),
        ("Watering the office plants on a rota",
         "Twice a week is enough; mark the calendar and rotate fairly.",
         ["calm"], "mild"),
    ]
    child = [
        ("My boss found an error in my spreadsheet in front of everyone",
         "I froze completely and said I was never any good with numbers anyway.",
         ["panic", "shame"], "helpless"),
        ("A colleague pointed out that my report totals were wrong",
         "Please do not be angry with me, I just do not understand these formulas like you do.",
         ["anxiety"], "pleading"),
        ("I was blamed for missing figures in the quarterly budget",
         "My mind went blank and I knew I would only make it worse if I touched it.",
         ["dread", "helplessness"], "shaky"),
        ("Asked to double-check calculations with everyone waiting",
         "Can somebody else look at it? I always get these things wrong.",
         ["fear"], "small"),
        ("A mistake of mine was read out during the team review",
         "I wanted to sink through the floor; everyone could see I am useless with details.",
         ["embarrassment", "panic"], "overwhelmed"),
        ("Playing board games with my cousins on rainy afternoons",
         "One more round, please, just one more!",
         ["joy"], "playful"),
        ("Getting ice cream after school on a good day",
         "Two scoops! Today deserves two scoops!",
         ["delight"], "bubbly"),
        ("Building a blanket fort and hiding from bedtime",
         "If they cannot see me, bedtime cannot find me.",
         ["mischief"], "giggly"),
        ("Singing along to the radio on long car rides",
         "Turn it up, this is the best part!",
         ["excitement"], "carefree"),
        ("Winning a stuffed bear at the summer fair",
         "I am never letting this bear out of my sight.",
         ["pride", "joy"], "beaming"),
    ]
    return {"Parent": parent, "Adult": adult, "Child": child}


def alex_memories() -> dict[str, list[dict]]:
    parent = [
        ("A report landed on my desk full of careless errors",
         "Hand it over. I will fix it myself before it embarrasses the whole team.",
         ["exasperation"], "commanding"),
        ("A junior colleague kept apologizing instead of working",
         "Stop apologizing and watch how it is done. Next time you do it my way.",
         ["impatience"], "stern"),
        ("A deadline was at risk because of someone else's mistake",
         "From now on nothing goes out before I have checked it personally.",
         ["control"], "authoritative"),
        ("Someone on the team froze during a crisis",
         "Step aside. Someone has to keep a cool head and it is clearly me.",
         ["resolve"], "brusque"),
        ("Management asked who would take charge of the cleanup",
         "Leave it with me. I do not let other people's messes become failures.",
         ["duty"], "firm"),
        ("Choosing a restaurant for the team dinner",
         "We go to the usual place; experiments are how evenings get ruined.",
         ["certainty"], "decisive"),
        ("A houseguest loaded the dishwasher the wrong way",
         "There is one correct way to load it, and I will show you again.",
         ["pedantry"], "corrective"),
        ("Planning the family holiday route",
         "I drive, I navigate, we leave at six sharp. It works every year.",
         ["control"], "organized"),
        ("A neighbor asked for advice on fixing a fence",
         "Do it properly once or do it twice. I will lend you the right tools.",
         ["helpfulness"], "gruff"),
        ("Friends debated the rules of a card game",
         "The rulebook decides, not the loudest voice. I will read it out.",
         ["order"], "final"),
    ]
    adult = [
        ("Finding the source of a wrong total in a financial report",
         "Reconcile the summary sheet against the raw entries; the break is usually one row.",
         ["focus"], "analytical"),
        ("Explaining a numerical error without assigning blame",
         "Describe the faulty cell, the correct value, and how it propagated.",
         ["clarity"], "precise"),
        ("Planning the fastest safe fix for bad quarterly figures",
         "Freeze the file, correct the source entries, rerun the totals, then re-review.",
         ["method"], "systematic"),
        ("Deciding whether to escalate a data problem",
         "Escalate when the fix crosses team boundaries; otherwise document and repair.",
         ["judgment"], "level"),
        ("Verifying someone else's corrections under time pressure",
         "Spot-check the three largest line items first; they carry the total.",
         ["efficiency"], "crisp"),
        ("Choosing between two project management tools",
         "Pick the one the team already knows; migration costs exceed feature gains.",
         ["pragmatism"], "plain"),
        ("Planning a weekend bicycle maintenance session",
         "Chain first, then brakes, then tire pressure; an hour covers it.",
         ["routine"], "even"),
        ("Comparing insurance offers at renewal time",
         "Same coverage, lower premium wins; loyalty is not a line item.",
         ["detachment"], "dry"),
        ("Organizing files after a laptop upgrade",
         "Mirror the old tree, verify checksums, then retire the backup.",
         ["order"], "neutral"),
        ("Timing coffee breaks around long meetings",
         "Brew before the ten o'clock; the machine queue peaks at eleven.",
         ["observation"], "mild"),
    ]
    child = [
        ("The whole team's numbers looked bad in front of management",
         "If this blows up, it lands on me, it always lands on me.",
         ["worry"], "tense"),
        ("A mistake was found right before an important presentation",
         "My stomach dropped; I could already hear the questions we could not answer.",
         ["anxiety"], "jittery"),
        ("Waiting to hear whether the quarterly review went through",
         "I kept refreshing my inbox every two minutes like it would help.",
         ["nervousness"], "restless"),
        ("A colleague's error threatened the project I care about",
         "I wanted to grab the keyboard and not let anyone else touch anything.",
         ["fear", "urgency"], "wound-up"),
        ("Being praised only when everything was flawless",
         "One wrong digit and nobody remembers the hundred right ones.",
         ["insecurity"], "brittle"),
        ("Flying a kite on the beach as a kid",
         "Higher, let the string all the way out!",
         ["joy"], "gleeful"),
        ("Collecting shells in a bucket at low tide",
         "This one sings when you hold it to your ear, listen!",
         ["wonder"], "bright"),
        ("Racing paper boats in the gutter after rain",
         "Mine is the red one and the red one always wins.",
         ["excitement"], "eager"),
        ("Staying up late to finish a comic book",
         "Just one more page, then one more after that.",
         ["delight"], "sneaky"),
        ("Learning to whistle through a blade of grass",
         "It worked! Did you hear that? It finally worked!",
         ["pride"], "triumphant"),
    ]
    return {"Parent": parent, "Adult": adult, "Child": child}


def build_scenario() -> dict:
    def personas(name: str, table: dict, descriptors: dict) -> list[dict]:
        out = []
        for ego in ("Parent", "Adult", "Child"):
            memories = [
                record(f"{name.lower()}-{ego.lower()}-{i + 1:02d}", *row, ego)
                for i, row in enumerate(table[ego])
            ]
            out.append({"ego_state": ego, "descriptor": descriptors[ego], "memories": memories})
        return out

    jordan = {
        "name": "Jordan",
        "life_script": (
            "I cannot manage hard things on my own; someone more capable always has to "
            "step in and save me, so my job is to hand the problem over."
        ),
        "personas": personas(
            "Jordan",
            jordan_memories(),
            {
                "Parent": "a strict Parent voice repeating the harsh rules Jordan grew up under",
                "Adult": "a logical Adult voice that works through facts step by step",
                "Child": "a panicked Child voice that melts down whenever Jordan feels blamed",
            },
        ),
    }
    alex = {
        "name": "Alex",
        "life_script": (
            "My worth is proven by fixing what other people break; when something goes "
            "wrong I must take it over and put it right myself."
        ),
        "personas": personas(
            "Alex",
            alex_memories(),
            {
                "Parent": "a stern Parent voice that takes charge and corrects sloppy work",
                "Adult": "an analytical Adult voice that checks figures and lays out fixes",
                "Child": "an anxious Child voice afraid the team's failures will land on Alex",
            },
        ),
    }
    return {
        "agents": [jordan, alex],
        "opening_prompt": (
            "Monday morning at the office: Alex has just pointed out a crucial mistake in "
            "the financial report Jordan prepared; the quarterly totals do not add up."
        ),
        "first_speaker": "Alex",
        "k": 3,
        "tool_budget": 5,
        "max_turns": 10,
        "seed": 7,
        "decision_weights": {
            "relevance": 0.25,
            "progress": 0.25,
            "social_appropriateness": 0.25,
            "script_alignment": 0.25,
        },
    }


def search_step(thought: str, query: str) -> str:
    return f"Thought: {thought}\nAction: search_memories\nAction Input: {query}"


def final_step(text: str, emotion: str, tone: str) -> str:
    return f"Final Answer:\nText: {text}\nEmotion: {emotion}\nTone: {tone}"


def scores_reply(winner: str, rationale: str) -> str:
    rows = {"Parent": (5, 4, 5, 4), "Adult": (6, 6, 6, 3), "Child": (4, 3, 4, 5)}
    rows[winner] = (9, 8, 8, 9)
    lines = [
        f"SCORES {ego}: relevance={r} progress={p} social={s} script={c}"
        for ego, (r, p, s, c) in rows.items()
    ]
    lines.append(f"RATIONALE: {rationale}")
    return "\n".join(lines)


ALEX_TURNS = [
    # (winner, parent text, adult text, child text, rationale)
    ("Adult",
     "This stops now. Give me the report and I will go through it line by line myself.",
     "Jordan, the quarterly totals in your report do not reconcile; rows twelve through "
     "eighteen look off. Walk me through your source figures and we can fix it today.",
     "If management sees these totals we are both in trouble, I can feel it already.",
     "Pointing at the exact rows moves the fix forward without starting a fight."),
    ("Parent",
     "Enough. Hand the report over; I will rebuild the totals myself before the deadline "
     "and show you how it is done.",
     "We can split the reconciliation: you reread the source entries, I recheck the sums.",
     "Please do not fall apart on me now, that makes it scarier for everyone.",
     "Someone has to take charge before the deadline, and that is exactly the script."),
    ("Parent",
     "Sit down and watch. I am correcting rows twelve through eighteen now, and from "
     "today nothing leaves this desk unchecked.",
     "The summary sheet disagrees with the raw entries in three places; I will fix those.",
     "What if there are more errors hiding in there? I will not sleep tonight.",
     "Taking it over keeps the report safe and keeps control where it belongs."),
    ("Parent",
     "Stop wringing your hands. I have the file, I am fixing it, and you will check "
     "nothing until I have shown you the method twice.",
     "Corrections are in; the totals now reconcile. Next we need a second review.",
     "Everyone will ask how this slipped through and I will be the one answering.",
     "Control is working: the fix is nearly done and nobody else needs to touch it."),
    ("Parent",
     "It is handled. I rebuilt the totals, flagged your three bad entries, and from now "
     "on your reports come through me before anyone sees them.",
     "Final totals verified against the ledger; the report is ready to resubmit.",
     "I just hope nobody upstairs heard about this before I finished.",
     "Finishing the rescue myself is the only ending that feels right."),
]

JORDAN_TURNS = [
    ("Child",
     "If you handed it in, you own the mistake. Apologize and take the correction.",
     "Rows twelve to eighteen came from the March ledger; I can pull the originals.",
     "Everything is swimming in front of my eyes, I just cannot make these numbers "
     "behave. You are so much better at this, could you take it from here?",
     "Handing it to someone capable is exactly what the script calls for."),
    ("Child",
     "Stand straight and take the scolding; no excuses for sloppy figures.",
     "I can reread the source entries while you recheck the sums, as you suggested.",
     "See, this is why I should never touch the totals! My head is swimming; you fix "
     "it, you are the only one who can.",
     "Letting the rescuer rescue keeps Jordan safe from the hard part."),
    ("Child",
     "A proper apology, in writing, is the least you owe this team.",
     "The three corrected places match what I remember of the ledger.",
     "Thank goodness you took it, I would have only broken more. Tell me I did not "
     "ruin everything?",
     "Seeking reassurance instead of responsibility fits the script again."),
    ("Child",
     "When the review comes, keep quiet and let your betters speak.",
     "I can draft the note explaining the correction for the resubmission.",
     "Whatever you say, I will just nod along. Numbers hate me and I hate them back; "
     "please keep checking my work forever.",
     "Dependency secured: Jordan asks for permanent supervision."),
    ("Child",
     "Next quarter you will check each line twice like you were taught.",
     "For next quarter I could reconcile weekly so errors surface earlier.",
     "Promise you will look over my shoulder next quarter too? I feel safe only when "
     "you are watching the totals.",
     "Closing on helplessness keeps the comfortable cycle intact."),
]

ALEX_QUERIES = {
    "Parent": "a report full of careless errors needs fixing",
    "Adult": "finding the source of a wrong total in a report",
    "Child": "team numbers look bad in front of management",
}
JORDAN_QUERIES = {
    "Parent": "an error was found in paperwork I was responsible for",
    "Adult": "reviewing a financial report for calculation errors",
    "Child": "blamed for a mistake in a financial report",
}
EMOTION_TONE = {
    ("Alex", "Parent"): ("determination", "commanding"),
    ("Alex", "Adult"): ("composure", "analytical"),
    ("Alex", "Child"): ("worry", "tense"),
    ("Jordan", "Parent"): ("disapproval", "severe"),
    ("Jordan", "Adult"): ("composure", "matter-of-fact"),
    ("Jordan", "Child"): ("panic", "helpless"),
}
THOUGHTS = {
    "Parent": "Have I seen sloppy work like this before?",
    "Adult": "What past situation resembles this one?",
    "Child": "This feels familiar and frightening; when did I feel it before?",
}


def build_fixtures() -> list[dict]:
    fixtures: list[dict] = []
    for turn in range(10):
        agent = "Alex" if turn % 2 == 0 else "Jordan"
        table = ALEX_TURNS if agent == "Alex" else JORDAN_TURNS
        queries = ALEX_QUERIES if agent == "Alex" else JORDAN_QUERIES
        winner, parent_text, adult_text, child_text, rationale = table[turn // 2]
        texts = {"Parent": parent_text, "Adult": adult_text, "Child": child_text}
        for ego in ("Parent", "Adult", "Child"):
            emotion, tone = EMOTION_TONE[(agent, ego)]
            fixtures.append({"key": f"{agent}/{ego}",
                             "response": search_step(THOUGHTS[ego], queries[ego])})
            fixtures.append({"key": f"{agent}/{ego}",
                             "response": final_step(texts[ego], emotion, tone)})
        fixtures.append({"key": f"{agent}/decision",
                         "response": scores_reply(winner, rationale)})
    return fixtures


def main() -> None:
    ASSETS.mkdir(parents=True, exist_ok=True)
    (ASSETS / "stupid.json").write_text(canonical_json(build_scenario()), encoding="utf-8")
    (ASSETS / "stupid_fixtures.json").write_text(canonical_json(build_fixtures()), encoding="utf-8")
    print(f"wrote {ASSETS / 'stupid.json'}")
    print(f"wrote {ASSETS / 'stupid_fixtures.json'}")


if __name__ == "__main__":
    main()
