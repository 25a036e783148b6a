"""Column vocabularies shared by ingestion and feature engineering."""

from __future__ import annotations

from importlib import resources

# Per-game Wyscout statistics, in glossary order.
GLOSSARY_STATS: tuple[str, ...] = (
    "total_matches", "total_minutes_on_field", "total_goals", "total_assists",
    "total_shots", "total_head_shots", "total_yellow_cards", "total_red_cards",
    "total_direct_red_cards", "total_penalties", "total_linkup_plays",
    "total_duels", "total_duels_won", "total_defensive_duels",
    "total_defensive_duels_won", "total_offensive_duels",
    "total_offensive_duels_won", "total_aerial_duels", "total_aerial_duels_won",
    "total_fouls", "total_passes", "total_successful_passes",
    "total_smart_passes", "total_successful_smart_passes",
    "total_passes_to_final_third", "total_successful_passes_to_final_third",
    "total_crosses", "total_successful_crosses", "total_forward_passes",
    "total_successful_forward_passes", "total_back_passes",
    "total_successful_back_passes", "total_through_passes",
    "total_successful_through_passes", "total_key_passes",
    "total_successful_key_passes", "total_vertical_passes",
    "total_successful_vertical_passes", "total_long_passes",
    "total_successful_long_passes", "total_dribbles",
    "total_successful_dribbles", "total_interceptions",
    "total_defensive_actions", "total_successful_defensive_actions",
    "total_attacking_actions", "total_successful_attacking_actions",
    "total_free_kicks", "total_free_kicks_on_target", "total_direct_free_kicks",
    "total_direct_free_kicks_on_target", "total_corners",
    "total_successful_penalties", "total_successful_linkup_plays",
    "total_accelerations", "total_pressing_duels", "total_pressing_duels_won",
    "total_loose_ball_duels", "total_loose_ball_duels_won",
    "total_missed_balls", "total_shot_assists", "total_shot_on_target_assists",
    "total_recoveries", "total_opponent_half_recoveries",
    "total_dangerous_opponent_half_recoveries", "total_losses",
    "total_own_half_losses", "total_dangerous_own_half_losses",
    "total_xg_shot", "total_xg_assist", "total_xg_save", "total_received_pass",
    "total_touch_in_box", "total_progressive_run", "total_offsides",
    "total_clearances", "total_second_assists", "total_third_assists",
    "total_shots_blocked", "total_fouls_suffered", "total_progressive_passes",
    "total_counterpressing_recoveries", "total_sliding_tackles",
    "total_goal_kicks", "total_dribbles_against", "total_dribbles_against_won",
    "total_goal_kicks_short", "total_goal_kicks_long", "total_shots_on_target",
    "total_successful_progressive_passes", "total_successful_sliding_tackles",
    "total_successful_goal_kicks", "total_field_aerial_duels",
    "total_field_aerial_duels_won", "total_gk_clean_sheets",
    "total_gk_conceded_goals", "total_gk_shots_against", "total_gk_exits",
    "total_gk_successful_exits", "total_gk_aerial_duels",
    "total_gk_aerial_duels_won", "total_gk_saves", "total_new_duels_won",
    "total_new_defensive_duels_won", "total_new_offensive_duels_won",
    "total_new_successful_dribbles", "total_lateral_passes",
    "total_successful_lateral_passes",
)

# Denominator of two engineered ratios; absent from the glossary, so when a
# match file omits it we derive it as defensive + attacking actions.
TOTAL_ACTIONS = "total_actions"

STAT_NAMES: tuple[str, ...] = GLOSSARY_STATS + (TOTAL_ACTIONS,)
STAT_INDEX: dict[str, int] = {name: i for i, name in enumerate(STAT_NAMES)}

# Kept as window totals rather than per-minute rates.
TOTAL_STATS = frozenset({"total_matches", "total_minutes_on_field"})

# (feature name, numerator stat, denominator stat)
RATIO_FEATURES: tuple[tuple[str, str, str], ...] = (
    ("ratio_minutes", "total_minutes_on_field", "total_matches"),
    ("ratio_goals_shots", "total_goals", "total_shots"),
    ("ratio_xg_shots", "total_xg_shot", "total_shots"),
    ("ratio_goals_xg", "total_goals", "total_xg_shot"),
    ("ratio_assists_xa", "total_xg_assist", "total_assists"),
    ("ratio_duels_won", "total_duels_won", "total_duels"),
    ("ratio_def_duels_won", "total_defensive_duels_won", "total_defensive_duels"),
    ("ratio_off_duels_won", "total_offensive_duels_won", "total_offensive_duels"),
    ("ratio_air_duels_won", "total_aerial_duels_won", "total_aerial_duels"),
    ("ratio_passes", "total_successful_passes", "total_passes"),
    ("ratio_smart_passes", "total_successful_smart_passes", "total_smart_passes"),
    ("ratio_third_passes", "total_successful_passes_to_final_third",
     "total_passes_to_final_third"),
    ("ratio_crosses", "total_successful_crosses", "total_crosses"),
    ("ratio_for_passes", "total_successful_forward_passes", "total_forward_passes"),
    ("ratio_back_passes", "total_successful_back_passes", "total_back_passes"),
    ("ratio_through_passes", "total_successful_through_passes",
     "total_through_passes"),
    ("ratio_key_passes", "total_successful_key_passes", "total_key_passes"),
    ("ratio_vert_passes", "total_successful_vertical_passes",
     "total_vertical_passes"),
    ("ratio_long_passes", "total_successful_long_passes", "total_long_passes"),
    ("ratio_dribbles", "total_successful_dribbles", "total_dribbles"),
    ("ratio_def_actions", "total_defensive_actions", TOTAL_ACTIONS),
    ("ratio_att_actions", "total_attacking_actions", TOTAL_ACTIONS),
    ("ratio_penalties", "total_successful_penalties", "total_penalties"),
    ("ratio_linup_plays", "total_successful_linkup_plays", "total_linkup_plays"),
    ("ratio_pressing_duels", "total_pressing_duels_won", "total_pressing_duels"),
    ("ratio_loose_ball", "total_loose_ball_duels_won", "total_loose_ball_duels"),
    ("ratio_opp_recoveries", "total_opponent_half_recoveries", "total_recoveries"),
    ("ratio_dang_recoveries", "total_dangerous_opponent_half_recoveries",
     "total_opponent_half_recoveries"),
    ("ratio_own_losses", "total_own_half_losses", "total_losses"),
    ("ratio_dang_losses", "total_dangerous_own_half_losses", "total_own_half_losses"),
    ("ratio_dribbles_against", "total_dribbles_against_won",
     "total_dribbles_against"),
    ("ratio_field_aerial_duels", "total_field_aerial_duels_won",
     "total_field_aerial_duels"),
    # the ratio table names the numerator "total_gk_save"; the glossary stat is
    # total_gk_saves
    ("ratio_save_xs", "total_gk_saves", "total_xg_save"),
    ("ratio_succ_exit", "total_gk_successful_exits", "total_gk_exits"),
    ("ratio_gk_air_duels", "total_gk_aerial_duels_won", "total_gk_aerial_duels"),
    ("ratio_lat_passes", "total_successful_lateral_passes", "total_lateral_passes"),
    ("ratio_clean_game", "total_gk_clean_sheets", "total_matches"),
)

# Ratios whose numerator is not a sub-count of the denominator.
UNBOUNDED_RATIOS = frozenset({
    "ratio_minutes", "ratio_goals_shots", "ratio_xg_shots", "ratio_goals_xg",
    "ratio_assists_xa", "ratio_save_xs",
})


def _bounded_pairs() -> tuple[tuple[str, str], ...]:
    """(part, whole) stat pairs where part <= whole must hold in every game."""
    names = set(STAT_NAMES)
    pairs = []
    for name in STAT_NAMES:
        whole = None
        if "_successful_" in name:
            whole = name.replace("_successful_", "_", 1)
        elif name.endswith("_won"):
            whole = name[: -len("_won")]
        elif name.endswith("_on_target") and name != "total_shot_on_target_assists":
            whole = name[: -len("_on_target")]
        if whole in names:
            pairs.append((name, whole))
    pairs += [
        ("total_shots_on_target", "total_shots"),
        ("total_direct_red_cards", "total_red_cards"),
        ("total_opponent_half_recoveries", "total_recoveries"),
        ("total_dangerous_opponent_half_recoveries", "total_opponent_half_recoveries"),
        ("total_own_half_losses", "total_losses"),
        ("total_dangerous_own_half_losses", "total_own_half_losses"),
        ("total_gk_clean_sheets", "total_matches"),
        ("total_defensive_actions", TOTAL_ACTIONS),
        ("total_attacking_actions", TOTAL_ACTIONS),
    ]
    return tuple(dict.fromkeys(pairs))


BOUNDED_PAIRS = _bounded_pairs()

POSITION_CODES: tuple[str, ...] = ("GK", "FB", "CD", "CDM", "MD", "AM", "WG", "FWD")

MAX_MINUTES = 130.0


def load_position_aliases(path=None) -> dict[str, str]:
    """Read a ``label,code`` alias file; the packaged table by default."""
    if path is None:
        text = resources.files("playervalue.data").joinpath(
            "position_aliases.csv").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    aliases = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#") or line == "label,code":
            continue
        label, _, code = line.rpartition(",")
        code = code.strip()
        if code not in POSITION_CODES:
            raise ValueError(f"position alias line {lineno}: unknown code {code!r}")
        aliases[label.strip()] = code
    return aliases
