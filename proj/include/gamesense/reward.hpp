#pragma once

// Declarative reward specification. Rewards live as JSON data, not code: the
// agent proposes rule edits as structured patches, every version is validated
// against the GSM's state schema and action space before it can run, and the
// evaluator itself is a fixed interpreter. Semantics follow the shape of the
// boss-fight reward template: terminal tiers on health reduction, linear
// per-step delta rules, guarded per-action rewards, and combo/count rules
// over the episode's action history.

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gamesense/common.hpp"
#include "gamesense/state_reader.hpp"

namespace gamesense {

// Optional activation window; a rule with a window only fires inside it.
// No shipped spec uses one, but patches may add them.
struct RuleWindow {
    std::optional<int64_t> min_step, max_step;
    std::optional<double> min_time, max_time;

    bool active(int64_t step, double step_time) const {
        if (min_step && step < *min_step) return false;
        if (max_step && step > *max_step) return false;
        if (min_time && step_time < *min_time) return false;
        if (max_time && step_time > *max_time) return false;
        return true;
    }
    bool empty() const { return !min_step && !max_step && !min_time && !max_time; }
};

// On episode end: reduction = 1 - prev[channel], first tier whose threshold
// is met wins, otherwise the fallback. Terminal reward short-circuits the
// other rules, mirroring the template's early return.
struct TerminalTier {
    double at_least = 0;
    double reward = 0;
};

struct TerminalRule {
    std::string channel;  // unused (may be empty) when tiers is empty
    std::vector<TerminalTier> tiers;
    double otherwise = 0;
};

// delta = prev - next for "decrease", next - prev for "increase". With a
// threshold: coeff * delta when delta > threshold, otherwise the flat
// `otherwise` value. Without one: coeff * delta unconditionally.
struct DeltaRule {
    std::string id;
    std::string channel;
    bool decrease = false;
    std::optional<double> threshold;
    double coeff = 0;
    double otherwise = 0;
    RuleWindow when;
};

// Fires when the step's action matches; the guard compares the step's
// channel delta (next - prev) against a value.
struct ActionRule {
    std::string id;
    int action = 0;
    std::string guard_channel;
    std::string guard_op;  // eq ne gt ge lt le
    double guard_value = 0;
    double if_true = 0;
    double if_false = 0;
    RuleWindow when;
};

// Bonus when the action history ends exactly with `suffix`.
struct ComboRule {
    std::string id;
    std::vector<int> suffix;
    double reward = 0;
};

// Applies once the episode-wide count of `action` exceeds `more_than`.
struct CountRule {
    std::string id;
    int action = 0;
    int more_than = 0;
    double reward = 0;
};

struct RewardSpec {
    int version = 0;
    std::optional<int> parent_version;
    TerminalRule terminal;
    std::vector<DeltaRule> delta_rules;
    std::vector<ActionRule> action_rules;
    std::vector<ComboRule> combo_rules;
    std::vector<CountRule> count_rules;
    double survival_bonus = 0;

    static Parsed<RewardSpec> from_json_text(const std::string& text);
    static Parsed<RewardSpec> from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    std::string to_json_text() const { return to_json().dump(2); }
};

// One step's worth of context. `action_history` is the whole episode so far,
// current action included as its last element; count rules scan all of it,
// combo rules only the tail. `step`/`step_time` feed rule windows.
struct RewardContext {
    const StateVector& prev;
    const StateVector& next;
    int action_idx = 0;
    bool done = false;
    const std::vector<int>& action_history;
    int64_t step = 0;
    double step_time = 0;
};

namespace detail {

inline const char* kGuardOps[] = {"eq", "ne", "gt", "ge", "lt", "le"};

inline bool known_guard_op(const std::string& op) {
    for (const char* k : kGuardOps)
        if (op == k) return true;
    return false;
}

inline bool guard_holds(const std::string& op, double delta, double value) {
    if (op == "eq") return delta == value;
    if (op == "ne") return delta != value;
    if (op == "gt") return delta > value;
    if (op == "ge") return delta >= value;
    if (op == "lt") return delta < value;
    return delta <= value;  // le
}

// Strict field access: every key must be known, every read key must exist.
struct JsonFields {
    const nlohmann::json& j;
    std::string where;
    std::set<std::string> seen;

    JsonFields(const nlohmann::json& jj, std::string w) : j(jj), where(std::move(w)) {
        if (!j.is_object()) throw std::runtime_error(where + " must be a JSON object");
    }

    const nlohmann::json* find(const std::string& key) {
        seen.insert(key);
        auto it = j.find(key);
        return it == j.end() ? nullptr : &*it;
    }

    const nlohmann::json& get(const std::string& key) {
        const nlohmann::json* p = find(key);
        if (!p) throw std::runtime_error(where + " is missing \"" + key + "\"");
        return *p;
    }

    double num(const std::string& key) {
        const nlohmann::json& v = get(key);
        if (!v.is_number()) throw std::runtime_error(where + " \"" + key + "\" must be a number");
        return v.get<double>();
    }

    double num_or(const std::string& key, double fallback) {
        const nlohmann::json* p = find(key);
        if (!p) return fallback;
        if (!p->is_number())
            throw std::runtime_error(where + " \"" + key + "\" must be a number");
        return p->get<double>();
    }

    int integer(const std::string& key) {
        const nlohmann::json& v = get(key);
        if (!v.is_number_integer())
            throw std::runtime_error(where + " \"" + key + "\" must be an integer");
        return v.get<int>();
    }

    std::string str(const std::string& key) {
        const nlohmann::json& v = get(key);
        if (!v.is_string()) throw std::runtime_error(where + " \"" + key + "\" must be a string");
        return v.get<std::string>();
    }

    std::string str_or(const std::string& key, const std::string& fallback) {
        const nlohmann::json* p = find(key);
        if (!p) return fallback;
        if (!p->is_string())
            throw std::runtime_error(where + " \"" + key + "\" must be a string");
        return p->get<std::string>();
    }

    void done() {
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!seen.count(it.key()))
                throw std::runtime_error(where + " has unknown field \"" + it.key() + "\"");
    }
};

inline RuleWindow window_from(JsonFields& f) {
    RuleWindow w;
    if (const nlohmann::json* p = f.find("when")) {
        JsonFields wf(*p, f.where + " when");
        if (const nlohmann::json* v = wf.find("min_step")) w.min_step = v->get<int64_t>();
        if (const nlohmann::json* v = wf.find("max_step")) w.max_step = v->get<int64_t>();
        if (const nlohmann::json* v = wf.find("min_time")) w.min_time = v->get<double>();
        if (const nlohmann::json* v = wf.find("max_time")) w.max_time = v->get<double>();
        wf.done();
    }
    return w;
}

inline nlohmann::json window_to(const RuleWindow& w) {
    nlohmann::json j = nlohmann::json::object();
    if (w.min_step) j["min_step"] = *w.min_step;
    if (w.max_step) j["max_step"] = *w.max_step;
    if (w.min_time) j["min_time"] = *w.min_time;
    if (w.max_time) j["max_time"] = *w.max_time;
    return j;
}

inline std::vector<int> int_list(const nlohmann::json& v, const std::string& where) {
    if (!v.is_array()) throw std::runtime_error(where + " must be an array");
    std::vector<int> out;
    for (const nlohmann::json& e : v) {
        if (!e.is_number_integer()) throw std::runtime_error(where + " must hold integers");
        out.push_back(e.get<int>());
    }
    return out;
}

inline DeltaRule delta_rule_from(const nlohmann::json& j, const std::string& where) {
    JsonFields f(j, where);
    DeltaRule r;
    r.id = f.str("id");
    r.channel = f.str("channel");
    std::string dir = f.str("direction");
    if (dir != "increase" && dir != "decrease")
        throw std::runtime_error(where + " direction must be \"increase\" or \"decrease\"");
    r.decrease = dir == "decrease";
    if (const nlohmann::json* t = f.find("threshold")) {
        if (!t->is_number()) throw std::runtime_error(where + " \"threshold\" must be a number");
        r.threshold = t->get<double>();
        r.otherwise = f.num("otherwise");
    }
    r.coeff = f.num("coeff");
    r.when = window_from(f);
    f.done();
    return r;
}

inline ActionRule action_rule_from(const nlohmann::json& j, const std::string& where) {
    JsonFields f(j, where);
    ActionRule r;
    r.id = f.str("id");
    r.action = f.integer("action");
    r.guard_channel = f.str("guard_channel");
    r.guard_op = f.str("guard_op");
    if (!known_guard_op(r.guard_op))
        throw std::runtime_error(where + " guard_op \"" + r.guard_op + "\" is not one of "
                                         "eq/ne/gt/ge/lt/le");
    r.guard_value = f.num("guard_value");
    r.if_true = f.num("if_true");
    r.if_false = f.num("if_false");
    r.when = window_from(f);
    f.done();
    return r;
}

inline ComboRule combo_rule_from(const nlohmann::json& j, const std::string& where) {
    JsonFields f(j, where);
    ComboRule r;
    r.id = f.str("id");
    r.suffix = int_list(f.get("suffix"), where + " suffix");
    r.reward = f.num("reward");
    f.done();
    return r;
}

inline CountRule count_rule_from(const nlohmann::json& j, const std::string& where) {
    JsonFields f(j, where);
    CountRule r;
    r.id = f.str("id");
    r.action = f.integer("action");
    r.more_than = f.integer("more_than");
    r.reward = f.num("reward");
    f.done();
    return r;
}

inline TerminalRule terminal_from(const nlohmann::json& j, const std::string& where) {
    JsonFields f(j, where);
    TerminalRule t;
    t.channel = f.str_or("channel", "");
    if (const nlohmann::json* tiers = f.find("tiers")) {
        if (!tiers->is_array()) throw std::runtime_error(where + " tiers must be an array");
        for (size_t i = 0; i < tiers->size(); ++i) {
            JsonFields tf((*tiers)[i], strf("%s tier %zu", where.c_str(), i));
            TerminalTier tier;
            tier.at_least = tf.num("at_least");
            tier.reward = tf.num("reward");
            tf.done();
            t.tiers.push_back(tier);
        }
    }
    t.otherwise = f.num("otherwise");
    f.done();
    return t;
}

}  // namespace detail

inline Parsed<RewardSpec> RewardSpec::from_json(const nlohmann::json& j) {
    try {
        detail::JsonFields f(j, "reward spec");
        RewardSpec s;
        s.version = f.integer("version");
        if (const nlohmann::json* p = f.find("parent_version")) {
            if (!p->is_null()) s.parent_version = p->get<int>();
        }
        s.terminal = detail::terminal_from(f.get("terminal"), "terminal");
        if (const nlohmann::json* rules = f.find("delta_rules")) {
            for (size_t i = 0; i < rules->size(); ++i)
                s.delta_rules.push_back(
                    detail::delta_rule_from((*rules)[i], strf("delta rule %zu", i)));
        }
        if (const nlohmann::json* rules = f.find("action_rules")) {
            for (size_t i = 0; i < rules->size(); ++i)
                s.action_rules.push_back(
                    detail::action_rule_from((*rules)[i], strf("action rule %zu", i)));
        }
        if (const nlohmann::json* rules = f.find("combo_rules")) {
            for (size_t i = 0; i < rules->size(); ++i)
                s.combo_rules.push_back(
                    detail::combo_rule_from((*rules)[i], strf("combo rule %zu", i)));
        }
        if (const nlohmann::json* rules = f.find("count_rules")) {
            for (size_t i = 0; i < rules->size(); ++i)
                s.count_rules.push_back(
                    detail::count_rule_from((*rules)[i], strf("count rule %zu", i)));
        }
        s.survival_bonus = f.num_or("survival_bonus", 0.0);
        f.done();
        return Parsed<RewardSpec>::success(std::move(s));
    } catch (const std::exception& e) {
        return Parsed<RewardSpec>::failure(e.what());
    }
}

inline Parsed<RewardSpec> RewardSpec::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) return Parsed<RewardSpec>::failure("reward spec is not valid JSON");
    return from_json(j);
}

inline nlohmann::json RewardSpec::to_json() const {
    nlohmann::json j;
    j["version"] = version;
    if (parent_version) j["parent_version"] = *parent_version;
    nlohmann::json t;
    if (!terminal.channel.empty()) t["channel"] = terminal.channel;
    t["tiers"] = nlohmann::json::array();
    for (const TerminalTier& tier : terminal.tiers)
        t["tiers"].push_back({{"at_least", tier.at_least}, {"reward", tier.reward}});
    t["otherwise"] = terminal.otherwise;
    j["terminal"] = t;
    j["delta_rules"] = nlohmann::json::array();
    for (const DeltaRule& r : delta_rules) {
        nlohmann::json e{{"id", r.id},
                         {"channel", r.channel},
                         {"direction", r.decrease ? "decrease" : "increase"},
                         {"coeff", r.coeff}};
        if (r.threshold) {
            e["threshold"] = *r.threshold;
            e["otherwise"] = r.otherwise;
        }
        if (!r.when.empty()) e["when"] = detail::window_to(r.when);
        j["delta_rules"].push_back(e);
    }
    j["action_rules"] = nlohmann::json::array();
    for (const ActionRule& r : action_rules) {
        nlohmann::json e{{"id", r.id},           {"action", r.action},
                         {"guard_channel", r.guard_channel}, {"guard_op", r.guard_op},
                         {"guard_value", r.guard_value},     {"if_true", r.if_true},
                         {"if_false", r.if_false}};
        if (!r.when.empty()) e["when"] = detail::window_to(r.when);
        j["action_rules"].push_back(e);
    }
    j["combo_rules"] = nlohmann::json::array();
    for (const ComboRule& r : combo_rules)
        j["combo_rules"].push_back({{"id", r.id}, {"suffix", r.suffix}, {"reward", r.reward}});
    j["count_rules"] = nlohmann::json::array();
    for (const CountRule& r : count_rules)
        j["count_rules"].push_back(
            {{"id", r.id}, {"action", r.action}, {"more_than", r.more_than}, {"reward", r.reward}});
    j["survival_bonus"] = survival_bonus;
    return j;
}

// Structural and schema checks; an empty result means the spec may run.
inline std::vector<std::string> validate_reward(const RewardSpec& spec, const StateSchema& schema,
                                                int action_count) {
    std::vector<std::string> bad;
    auto channel_ok = [&](const std::string& name, const std::string& where) {
        if (schema.index_of(name) < 0)
            bad.push_back(where + " references unknown channel \"" + name + "\"");
    };
    auto action_ok = [&](int a, const std::string& where) {
        if (a < 0 || a >= action_count)
            bad.push_back(strf("%s action index %d is outside the %d-action space", where.c_str(),
                               a, action_count));
    };

    if (spec.version < 0) bad.push_back("version must be non-negative");
    if (!spec.terminal.tiers.empty()) {
        if (spec.terminal.channel.empty())
            bad.push_back("terminal rule with tiers needs a channel");
        else
            channel_ok(spec.terminal.channel, "terminal rule");
        for (size_t i = 1; i < spec.terminal.tiers.size(); ++i)
            if (spec.terminal.tiers[i].at_least >= spec.terminal.tiers[i - 1].at_least) {
                bad.push_back("terminal tier thresholds must be strictly decreasing");
                break;
            }
    }

    std::set<std::string> ids;
    auto id_ok = [&](const std::string& id, const std::string& where) {
        if (id.empty()) bad.push_back(where + " has an empty id");
        if (!ids.insert(id).second) bad.push_back("duplicate rule id \"" + id + "\"");
    };
    auto finite_ok = [&](double v, const std::string& where) {
        if (!std::isfinite(v)) bad.push_back(where + " has a non-finite value");
    };

    for (const DeltaRule& r : spec.delta_rules) {
        std::string where = "delta rule \"" + r.id + "\"";
        id_ok(r.id, where);
        channel_ok(r.channel, where);
        finite_ok(r.coeff, where);
        finite_ok(r.otherwise, where);
        if (r.threshold) finite_ok(*r.threshold, where);
    }
    for (const ActionRule& r : spec.action_rules) {
        std::string where = "action rule \"" + r.id + "\"";
        id_ok(r.id, where);
        action_ok(r.action, where);
        channel_ok(r.guard_channel, where);
        if (!detail::known_guard_op(r.guard_op)) bad.push_back(where + " has a bad guard_op");
        finite_ok(r.guard_value, where);
        finite_ok(r.if_true, where);
        finite_ok(r.if_false, where);
    }
    for (const ComboRule& r : spec.combo_rules) {
        std::string where = "combo rule \"" + r.id + "\"";
        id_ok(r.id, where);
        if (r.suffix.empty()) bad.push_back(where + " suffix must not be empty");
        for (int a : r.suffix) action_ok(a, where);
        finite_ok(r.reward, where);
    }
    for (const CountRule& r : spec.count_rules) {
        std::string where = "count rule \"" + r.id + "\"";
        id_ok(r.id, where);
        action_ok(r.action, where);
        if (r.more_than < 0) bad.push_back(where + " more_than must be non-negative");
        finite_ok(r.reward, where);
    }
    if (!std::isfinite(spec.survival_bonus)) bad.push_back("survival_bonus must be finite");
    return bad;
}

// Binds channel names to state-vector indices once; evaluate() is then a
// pure function over the step context, cheap enough for the training loop.
class RewardEvaluator {
  public:
    RewardEvaluator(RewardSpec spec, const StateSchema& schema, int action_count)
        : spec_(std::move(spec)) {
        auto bad = validate_reward(spec_, schema, action_count);
        if (!bad.empty())
            throw std::invalid_argument("reward spec rejected: " + bad.front());
        terminal_idx_ =
            spec_.terminal.tiers.empty() ? -1 : schema.index_of(spec_.terminal.channel);
        for (const DeltaRule& r : spec_.delta_rules)
            delta_idx_.push_back(schema.index_of(r.channel));
        for (const ActionRule& r : spec_.action_rules)
            guard_idx_.push_back(schema.index_of(r.guard_channel));
    }

    const RewardSpec& spec() const { return spec_; }

    double evaluate(const RewardContext& ctx) const {
        // Terminal branch short-circuits everything else.
        if (ctx.done) {
            if (terminal_idx_ < 0) return spec_.terminal.otherwise;
            double reduction = 1.0 - ctx.prev[size_t(terminal_idx_)];
            for (const TerminalTier& tier : spec_.terminal.tiers)
                if (reduction >= tier.at_least) return tier.reward;
            return spec_.terminal.otherwise;
        }

        double reward = spec_.survival_bonus;
        for (size_t i = 0; i < spec_.delta_rules.size(); ++i) {
            const DeltaRule& r = spec_.delta_rules[i];
            if (!r.when.active(ctx.step, ctx.step_time)) continue;
            double d = ctx.next[size_t(delta_idx_[i])] - ctx.prev[size_t(delta_idx_[i])];
            if (r.decrease) d = -d;
            if (!r.threshold)
                reward += r.coeff * d;
            else if (d > *r.threshold)
                reward += r.coeff * d;
            else
                reward += r.otherwise;
        }
        for (size_t i = 0; i < spec_.action_rules.size(); ++i) {
            const ActionRule& r = spec_.action_rules[i];
            if (r.action != ctx.action_idx) continue;
            if (!r.when.active(ctx.step, ctx.step_time)) continue;
            double d = ctx.next[size_t(guard_idx_[i])] - ctx.prev[size_t(guard_idx_[i])];
            reward += detail::guard_holds(r.guard_op, d, r.guard_value) ? r.if_true : r.if_false;
        }
        for (const ComboRule& r : spec_.combo_rules) {
            size_t n = r.suffix.size();
            if (ctx.action_history.size() < n) continue;
            bool match = true;
            for (size_t i = 0; i < n; ++i)
                if (ctx.action_history[ctx.action_history.size() - n + i] != r.suffix[i])
                    match = false;
            if (match) reward += r.reward;
        }
        for (const CountRule& r : spec_.count_rules) {
            int count = 0;
            for (int a : ctx.action_history)
                if (a == r.action) ++count;
            if (count > r.more_than) reward += r.reward;
        }
        return reward;
    }

  private:
    RewardSpec spec_;
    int terminal_idx_ = -1;
    std::vector<int> delta_idx_;
    std::vector<int> guard_idx_;
};

// Applies a patch (JSON array of edits) to produce the next version. Any
// invalid edit or resulting invariant violation rejects the whole patch;
// on success the result records the old version as its parent.
//
// Edit shapes:
//   {"op":"set", "id":RULE, "field":NAME, "value":V}
//   {"op":"remove", "id":RULE}
//   {"op":"add_delta_rule"|"add_action_rule"|"add_combo_rule"|"add_count_rule", "rule":{...}}
//   {"op":"set_terminal", "terminal":{...}}
//   {"op":"set_survival_bonus", "value":V}
inline Parsed<RewardSpec> apply_patch(const RewardSpec& base, const nlohmann::json& patch,
                                      const StateSchema& schema, int action_count) {
    if (!patch.is_array()) return Parsed<RewardSpec>::failure("patch must be a JSON array");
    RewardSpec next = base;
    next.version = base.version + 1;
    next.parent_version = base.version;

    try {
        for (size_t ei = 0; ei < patch.size(); ++ei) {
            std::string where = strf("patch edit %zu", ei);
            detail::JsonFields f(patch[ei], where);
            std::string op = f.str("op");

            if (op == "set") {
                std::string id = f.str("id");
                std::string field = f.str("field");
                const nlohmann::json& value = f.get("value");
                f.done();
                bool found = false;
                auto set_num = [&](double& slot) {
                    if (!value.is_number())
                        throw std::runtime_error(where + " value must be a number");
                    slot = value.get<double>();
                    found = true;
                };
                auto set_int = [&](int& slot) {
                    if (!value.is_number_integer())
                        throw std::runtime_error(where + " value must be an integer");
                    slot = value.get<int>();
                    found = true;
                };
                for (DeltaRule& r : next.delta_rules) {
                    if (r.id != id) continue;
                    if (field == "coeff")
                        set_num(r.coeff);
                    else if (field == "otherwise")
                        set_num(r.otherwise);
                    else if (field == "threshold") {
                        if (!value.is_number())
                            throw std::runtime_error(where + " value must be a number");
                        r.threshold = value.get<double>();
                        found = true;
                    } else
                        throw std::runtime_error(where + " delta rules have no field \"" + field +
                                                 "\"");
                }
                for (ActionRule& r : next.action_rules) {
                    if (r.id != id) continue;
                    if (field == "if_true")
                        set_num(r.if_true);
                    else if (field == "if_false")
                        set_num(r.if_false);
                    else if (field == "guard_value")
                        set_num(r.guard_value);
                    else
                        throw std::runtime_error(where + " action rules have no field \"" + field +
                                                 "\"");
                }
                for (ComboRule& r : next.combo_rules) {
                    if (r.id != id) continue;
                    if (field == "reward")
                        set_num(r.reward);
                    else
                        throw std::runtime_error(where + " combo rules have no field \"" + field +
                                                 "\"");
                }
                for (CountRule& r : next.count_rules) {
                    if (r.id != id) continue;
                    if (field == "reward")
                        set_num(r.reward);
                    else if (field == "more_than")
                        set_int(r.more_than);
                    else
                        throw std::runtime_error(where + " count rules have no field \"" + field +
                                                 "\"");
                }
                if (!found)
                    throw std::runtime_error(where + " targets unknown rule id \"" + id + "\"");
            } else if (op == "remove") {
                std::string id = f.str("id");
                f.done();
                size_t before = next.delta_rules.size() + next.action_rules.size() +
                                next.combo_rules.size() + next.count_rules.size();
                std::erase_if(next.delta_rules, [&](const DeltaRule& r) { return r.id == id; });
                std::erase_if(next.action_rules, [&](const ActionRule& r) { return r.id == id; });
                std::erase_if(next.combo_rules, [&](const ComboRule& r) { return r.id == id; });
                std::erase_if(next.count_rules, [&](const CountRule& r) { return r.id == id; });
                size_t after = next.delta_rules.size() + next.action_rules.size() +
                               next.combo_rules.size() + next.count_rules.size();
                if (after == before)
                    throw std::runtime_error(where + " targets unknown rule id \"" + id + "\"");
            } else if (op == "add_delta_rule") {
                next.delta_rules.push_back(
                    detail::delta_rule_from(f.get("rule"), where + " rule"));
                f.done();
            } else if (op == "add_action_rule") {
                next.action_rules.push_back(
                    detail::action_rule_from(f.get("rule"), where + " rule"));
                f.done();
            } else if (op == "add_combo_rule") {
                next.combo_rules.push_back(
                    detail::combo_rule_from(f.get("rule"), where + " rule"));
                f.done();
            } else if (op == "add_count_rule") {
                next.count_rules.push_back(
                    detail::count_rule_from(f.get("rule"), where + " rule"));
                f.done();
            } else if (op == "set_terminal") {
                next.terminal = detail::terminal_from(f.get("terminal"), where + " terminal");
                f.done();
            } else if (op == "set_survival_bonus") {
                next.survival_bonus = f.num("value");
                f.done();
            } else {
                throw std::runtime_error(where + " has unknown op \"" + op + "\"");
            }
        }
    } catch (const std::exception& e) {
        return Parsed<RewardSpec>::failure(e.what());
    }

    auto bad = validate_reward(next, schema, action_count);
    if (!bad.empty()) return Parsed<RewardSpec>::failure("patched spec invalid: " + bad.front());
    return Parsed<RewardSpec>::success(std::move(next));
}

}  // namespace gamesense
