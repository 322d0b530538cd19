"""Adversary harness, attack scenarios and guessing-effort analytics."""

from .entropy import (BruteforceStats, guess_attempts, sibling_average_guesses,
                      simulate_bruteforce)
from .harness import (Action, AdversaryPort, AdversaryScript, AttackOutcome, ScriptError, Trigger,
                      Verdict, classify, execute_attack)
from .scenarios import (Scenario, bruteforce_attack, get_scenario, run_scenario,
                        scenario_suite)

__all__ = [
    "BruteforceStats", "guess_attempts", "sibling_average_guesses", "simulate_bruteforce",
    "Action", "AdversaryPort", "AdversaryScript", "AttackOutcome", "ScriptError", "Trigger",
    "Verdict", "classify", "execute_attack", "Scenario", "bruteforce_attack", "get_scenario",
    "run_scenario", "scenario_suite",
]
