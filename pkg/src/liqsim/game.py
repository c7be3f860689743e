"""Two-player bilateral clearing stage game.

Both players privately commit a non-negative integer offer bounded by their
bond balance. The clearing rule converts the offer pair into an executed
quantity q, and each player's payoff is q. Two regimes are supported:

* ``exact``   -- trade happens only when both offers are equal and positive.
* ``minfill`` -- any two positive offers clear at the smaller of the two.

A brute-force pure-Nash oracle is included for validating equilibrium
structure at small balances. It reports what exhaustive best-response
checking actually finds, never a closed form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

# Oracle guard: enumeration is quadratic in the balances and only meant for
# desk-scale validation.
ENUMERATION_BOUND = 64


class ClearingRule(enum.Enum):
    EXACT = "exact"
    MINFILL = "minfill"

    @classmethod
    def parse(cls, name: str) -> "ClearingRule":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown clearing rule {name!r}; expected one of "
                f"{[r.value for r in cls]}"
            ) from None


@dataclass(frozen=True)
class TradeOutcome:
    """Result of clearing one offer pair."""

    offer_i: int
    offer_j: int
    quantity: int
    matched: bool


def clear(rule: ClearingRule, a_i: int, a_j: int) -> TradeOutcome:
    """Clear a pair of offers under `rule`.

    Offers must be non-negative integers; legality against balances is the
    caller's job (offer 0 is accepted here because the marginal-contribution
    counterfactual needs it).
    """
    if a_i < 0 or a_j < 0:
        raise ValueError(f"offers must be non-negative, got ({a_i}, {a_j})")
    if rule is ClearingRule.EXACT:
        q = a_i if (a_i == a_j and a_i > 0) else 0
    else:
        q = min(a_i, a_j) if (a_i > 0 and a_j > 0) else 0
    return TradeOutcome(offer_i=a_i, offer_j=a_j, quantity=q, matched=q > 0)


def payoff(outcome: TradeOutcome) -> tuple[int, int]:
    """Both sides earn the cleared quantity."""
    return outcome.quantity, outcome.quantity


def best_response_set(rule: ClearingRule, balance_i: int, a_j: int) -> set[int]:
    """All legal offers of player i that maximize payoff against a fixed a_j."""
    if balance_i < 0:
        raise ValueError("balance must be non-negative")
    payoffs = {a: clear(rule, a, a_j).quantity for a in range(balance_i + 1)}
    best = max(payoffs.values())
    return {a for a, p in payoffs.items() if p == best}


def enumerate_pure_nash(
    rule: ClearingRule,
    balance_i: int,
    balance_j: int,
    bound: int = ENUMERATION_BOUND,
) -> set[tuple[int, int]]:
    """Exhaustively enumerate pure Nash equilibria of the stage game.

    A profile is an equilibrium when neither player has a strictly improving
    unilateral deviation under payoff = q (weak Nash). The full profile grid
    (balance_i+1) x (balance_j+1) is checked.
    """
    if balance_i < 0 or balance_j < 0:
        raise ValueError("balances must be non-negative")
    if balance_i > bound or balance_j > bound:
        raise ValueError(
            f"balances ({balance_i}, {balance_j}) exceed enumeration bound {bound}"
        )
    equilibria: set[tuple[int, int]] = set()
    for a_i in range(balance_i + 1):
        br_j = best_response_set(ClearingRule(rule), balance_j, a_i)
        for a_j in range(balance_j + 1):
            if a_j not in br_j:
                continue
            if a_i in best_response_set(rule, balance_i, a_j):
                equilibria.add((a_i, a_j))
    return equilibria


def closed_form_pure_nash(
    rule: ClearingRule, balance_i: int, balance_j: int
) -> set[tuple[int, int]]:
    """Closed-form pure-Nash sets, derived from best-response structure.

    Exact: the diagonal {(a, a) : 0 <= a <= min(B_i, B_j)} plus zero-trade
    profiles where one side offers 0 and the other an amount the first
    cannot match (only possible when balances differ).

    MinFill: the same diagonal plus positive-trade profiles where the
    smaller offer sits at its owner's full balance, e.g. (B_i, b) with
    B_i < b <= B_j. Uniqueness of (min, min) does NOT hold: any diagonal
    profile leaves neither player a strictly improving deviation, because
    raising an offer above the partner's cannot raise min(a_i, a_j).
    """
    m = min(balance_i, balance_j)
    diag: set[tuple[int, int]] = {(a, a) for a in range(m + 1)}
    if rule is ClearingRule.EXACT:
        diag |= {(0, b) for b in range(balance_i + 1, balance_j + 1)}
        diag |= {(b, 0) for b in range(balance_j + 1, balance_i + 1)}
    else:
        diag |= {(balance_i, b) for b in range(balance_i + 1, balance_j + 1)}
        diag |= {(b, balance_j) for b in range(balance_j + 1, balance_i + 1)}
    return diag


def positive_trade_profiles(
    rule: ClearingRule, profiles: set[tuple[int, int]]
) -> set[tuple[int, int]]:
    """Restrict a profile set to those that actually clear (q > 0)."""
    return {p for p in profiles if clear(rule, *p).quantity > 0}


def exact_diagonal_claim_holds(balance_i: int, balance_j: int) -> bool:
    """Exact rule: positive-trade equilibria are exactly the positive diagonal.

    Kept as a predicate separate from the oracle so a closed-form claim can
    never mask what enumeration finds.
    """
    found = positive_trade_profiles(
        ClearingRule.EXACT,
        enumerate_pure_nash(ClearingRule.EXACT, balance_i, balance_j),
    )
    return found == {(a, a) for a in range(1, min(balance_i, balance_j) + 1)}


def minfill_uniqueness_claim_holds(balance_i: int, balance_j: int) -> bool:
    """MinFill claim: (min, min) is the only positive-trade equilibrium.

    Enumeration refutes this whenever min(B_i, B_j) >= 2: every smaller
    diagonal profile is also a weak equilibrium. The predicate reports what
    brute force finds so the discrepancy stays visible.
    """
    found = positive_trade_profiles(
        ClearingRule.MINFILL,
        enumerate_pure_nash(ClearingRule.MINFILL, balance_i, balance_j),
    )
    m = min(balance_i, balance_j)
    return found == {(m, m)}
