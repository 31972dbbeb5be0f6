#pragma once

// Modifiers: ordered lists of primitive edits applied to copies of objects
// or homogeneous classes, with effect-based kind classification.

#include <oodn/error.hpp>
#include <oodn/model.hpp>

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace oodn {

namespace edit {

struct SetValue {
    std::string property;
    std::optional<Magnitude> value;  // nullopt abstracts a class-level value
    friend bool operator==(const SetValue&, const SetValue&) = default;
};
struct SetUnits {
    std::string property;
    std::string units;
    friend bool operator==(const SetUnits&, const SetUnits&) = default;
};
/// Verification of a qualitative property, or else the body of a method.
struct SetExpression {
    std::string member;
    Expr expression;
    friend bool operator==(const SetExpression&, const SetExpression&) = default;
};
struct AddProperty {
    Property property;
    friend bool operator==(const AddProperty&, const AddProperty&) = default;
};
struct RemoveProperty {
    std::string property;
    friend bool operator==(const RemoveProperty&, const RemoveProperty&) = default;
};
struct ReplaceProperty {
    std::string old_name;
    Property property;
    friend bool operator==(const ReplaceProperty&, const ReplaceProperty&) = default;
};
struct AddMethod {
    Method method;
    friend bool operator==(const AddMethod&, const AddMethod&) = default;
};
struct RemoveMethod {
    std::string method;
    friend bool operator==(const RemoveMethod&, const RemoveMethod&) = default;
};
struct ReplaceMethod {
    std::string old_name;
    Method method;
    friend bool operator==(const ReplaceMethod&, const ReplaceMethod&) = default;
};

} // namespace edit

using ModificationFunction = std::variant<edit::SetValue, edit::SetUnits, edit::SetExpression, edit::AddProperty,
                                          edit::RemoveProperty, edit::ReplaceProperty, edit::AddMethod,
                                          edit::RemoveMethod, edit::ReplaceMethod>;

/// Operation name as used in documents ("setValue", "addProperty", ...).
inline std::string_view edit_name(const ModificationFunction& f) {
    static constexpr std::string_view names[] = {"setValue",        "setUnits",  "setExpression",
                                                 "addProperty",     "removeProperty", "replaceProperty",
                                                 "addMethod",       "removeMethod",   "replaceMethod"};
    return names[f.index()];
}

enum class TargetKind : std::uint8_t { Object, Class };

inline std::string_view to_string(TargetKind k) { return k == TargetKind::Object ? "object" : "class"; }

inline std::optional<TargetKind> parse_target_kind(std::string_view s) {
    if (s == "object") return TargetKind::Object;
    if (s == "class") return TargetKind::Class;
    return std::nullopt;
}

struct Modifier {
    std::string name;
    TargetKind target_kind = TargetKind::Class;
    std::vector<ModificationFunction> edits;
    /// The concept the modifier is declared on, if any.
    std::optional<std::string> target;

    void validate() const {
        if (name.empty()) throw ModifierError("modifier name must not be empty");
        if (edits.empty()) throw ModifierError("modifier '" + name + "': edit list must not be empty");
        for (std::size_t i = 0; i < edits.size(); ++i) {
            auto fail = [&](const std::string& why) {
                throw ModifierError("modifier '" + name + "', edit " + std::to_string(i) + " ("
                                    + std::string(edit_name(edits[i])) + "): " + why);
            };
            try {
                std::visit(
                    [&](const auto& e) {
                        using E = std::decay_t<decltype(e)>;
                        if constexpr (std::is_same_v<E, edit::SetValue> || std::is_same_v<E, edit::SetUnits>
                                      || std::is_same_v<E, edit::RemoveProperty>) {
                            if (e.property.empty()) fail("property name must not be empty");
                            if constexpr (std::is_same_v<E, edit::SetUnits>) {
                                if (e.units.empty()) fail("units must not be empty");
                            }
                        } else if constexpr (std::is_same_v<E, edit::SetExpression>) {
                            if (e.member.empty()) fail("member name must not be empty");
                        } else if constexpr (std::is_same_v<E, edit::AddProperty>) {
                            e.property.validate();
                        } else if constexpr (std::is_same_v<E, edit::ReplaceProperty>) {
                            if (e.old_name.empty()) fail("replaced name must not be empty");
                            e.property.validate();
                        } else if constexpr (std::is_same_v<E, edit::AddMethod>) {
                            e.method.validate();
                        } else if constexpr (std::is_same_v<E, edit::RemoveMethod>) {
                            if (e.method.empty()) fail("method name must not be empty");
                        } else {
                            if (e.old_name.empty()) fail("replaced name must not be empty");
                            e.method.validate();
                        }
                    },
                    edits[i]);
            } catch (const ModelError& e) {
                fail(e.what());
            }
        }
    }

    friend bool operator==(const Modifier&, const Modifier&) = default;
};

// ---------------------------------------------------------------------------
// Application

namespace detail {

inline void apply_edit(const ModificationFunction& f, Specification& spec, Signature& sig) {
    auto property = [&](const std::string& n) -> Property& {
        Property* p = spec.find(n);
        if (!p) throw ModifierError("no property named '" + n + "'");
        return *p;
    };
    std::visit(
        [&](const auto& e) {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, edit::SetValue>) {
                auto* q = property(e.property).quantitative();
                if (!q) throw ModifierError("setValue: property '" + e.property + "' is qualitative");
                q->value = e.value;
            } else if constexpr (std::is_same_v<E, edit::SetUnits>) {
                auto* q = property(e.property).quantitative();
                if (!q) throw ModifierError("setUnits: property '" + e.property + "' is qualitative");
                q->units = e.units;
            } else if constexpr (std::is_same_v<E, edit::SetExpression>) {
                if (Property* p = spec.find(e.member)) {
                    auto* q = p->qualitative();
                    if (!q) throw ModifierError("setExpression: property '" + e.member + "' is quantitative");
                    q->verification = e.expression;
                    q->degree.reset();  // a stored degree would be stale
                } else if (Method* m = sig.find(e.member)) {
                    m->body = e.expression;
                } else {
                    throw ModifierError("no property or method named '" + e.member + "'");
                }
            } else if constexpr (std::is_same_v<E, edit::AddProperty>) {
                if (spec.contains(e.property.name()))
                    throw ModifierError("property '" + e.property.name() + "' already exists");
                spec.add(e.property);
            } else if constexpr (std::is_same_v<E, edit::RemoveProperty>) {
                property(e.property);
                spec.remove(e.property);
            } else if constexpr (std::is_same_v<E, edit::ReplaceProperty>) {
                property(e.old_name);
                if (e.property.name() != e.old_name && spec.contains(e.property.name()))
                    throw ModifierError("property '" + e.property.name() + "' already exists");
                spec.replace(e.old_name, e.property);
            } else if constexpr (std::is_same_v<E, edit::AddMethod>) {
                if (sig.contains(e.method.name)) throw ModifierError("method '" + e.method.name + "' already exists");
                sig.add(e.method);
            } else if constexpr (std::is_same_v<E, edit::RemoveMethod>) {
                if (!sig.contains(e.method)) throw ModifierError("no method named '" + e.method + "'");
                sig.remove(e.method);
            } else {
                if (!sig.contains(e.old_name)) throw ModifierError("no method named '" + e.old_name + "'");
                if (e.method.name != e.old_name && sig.contains(e.method.name))
                    throw ModifierError("method '" + e.method.name + "' already exists");
                sig.replace(e.old_name, e.method);
            }
        },
        f);
}

inline void apply_all(const Modifier& m, std::string_view target, Specification& spec, Signature& sig) {
    for (std::size_t i = 0; i < m.edits.size(); ++i) {
        try {
            apply_edit(m.edits[i], spec, sig);
        } catch (const Error& e) {
            throw ModifierError("modifier '" + m.name + "' on '" + std::string(target) + "', edit "
                                + std::to_string(i) + " (" + std::string(edit_name(m.edits[i])) + "): " + e.what());
        }
    }
}

} // namespace detail

/// Applies `m` to a copy of the homogeneous class `t`. The result keeps t's
/// name; callers rename it.
inline ClassDef apply_to_class(const Modifier& m, const ClassDef& t) {
    if (m.target_kind != TargetKind::Class)
        throw ModifierError("modifier '" + m.name + "' targets objects, not classes");
    if (!t.is_homogeneous())
        throw ModifierError("modifier '" + m.name + "': class '" + t.name + "' must be homogeneous");
    ClassDef out = t;
    detail::apply_all(m, t.name, out.core.specification, out.core.signature);
    try {
        out.validate();
    } catch (const ModelError& e) {
        throw ModifierError("modifier '" + m.name + "' leaves an invalid class: " + e.what());
    }
    return out;
}

/// Applies `m` to a copy of `o`; identifier and clone index are kept.
inline ObjectInstance apply_to_object(const Modifier& m, const ObjectInstance& o) {
    if (m.target_kind != TargetKind::Object)
        throw ModifierError("modifier '" + m.name + "' targets classes, not objects");
    ObjectInstance out = o;
    detail::apply_all(m, o.label(), out.specification, out.signature);
    try {
        out.validate();
    } catch (const ModelError& e) {
        throw ModifierError("modifier '" + m.name + "' leaves an invalid object: " + e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Classification

enum class BasicKind : std::uint8_t { Full, Partial, Generating, Destroying, Commutable };

inline std::string_view to_string(BasicKind k) {
    switch (k) {
        case BasicKind::Full: return "full";
        case BasicKind::Partial: return "partial";
        case BasicKind::Generating: return "generating";
        case BasicKind::Destroying: return "destroying";
        case BasicKind::Commutable: return "commutable";
    }
    return "?";
}

/// "complete" is accepted as a synonym of "full".
inline std::optional<BasicKind> parse_basic_kind(std::string_view s) {
    if (s == "complete") return BasicKind::Full;
    for (auto k : {BasicKind::Full, BasicKind::Partial, BasicKind::Generating, BasicKind::Destroying,
                   BasicKind::Commutable}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

/// Effect of a modifier on one concrete target.
struct ModifierKind {
    std::set<BasicKind> kinds;
    std::set<MemberKey> coverage;  // pre-existing members touched
    std::size_t member_count = 0;  // members of the target before application

    bool has(BasicKind k) const { return kinds.contains(k); }
    friend bool operator==(const ModifierKind&, const ModifierKind&) = default;
};

namespace detail {

inline ModifierKind classify_members(const Modifier& m, const Specification& spec, const Signature& sig) {
    ModifierKind out;
    out.member_count = spec.size() + sig.size();
    auto touch = [&](MemberKind kind, const std::string& n) {
        bool existed = kind == MemberKind::Property ? spec.contains(n) : sig.contains(n);
        if (existed) out.coverage.insert({kind, n});
    };
    for (const auto& f : m.edits) {
        std::visit(
            [&](const auto& e) {
                using E = std::decay_t<decltype(e)>;
                if constexpr (std::is_same_v<E, edit::SetValue> || std::is_same_v<E, edit::SetUnits>) {
                    touch(MemberKind::Property, e.property);
                } else if constexpr (std::is_same_v<E, edit::SetExpression>) {
                    touch(spec.contains(e.member) ? MemberKind::Property : MemberKind::Method, e.member);
                } else if constexpr (std::is_same_v<E, edit::AddProperty> || std::is_same_v<E, edit::AddMethod>) {
                    out.kinds.insert(BasicKind::Generating);
                } else if constexpr (std::is_same_v<E, edit::RemoveProperty>) {
                    out.kinds.insert(BasicKind::Destroying);
                    touch(MemberKind::Property, e.property);
                } else if constexpr (std::is_same_v<E, edit::RemoveMethod>) {
                    out.kinds.insert(BasicKind::Destroying);
                    touch(MemberKind::Method, e.method);
                } else if constexpr (std::is_same_v<E, edit::ReplaceProperty>) {
                    out.kinds.insert(BasicKind::Commutable);
                    touch(MemberKind::Property, e.old_name);
                } else {
                    out.kinds.insert(BasicKind::Commutable);
                    touch(MemberKind::Method, e.old_name);
                }
            },
            f);
    }
    bool full = out.member_count > 0 && out.coverage.size() == out.member_count;
    out.kinds.insert(full ? BasicKind::Full : BasicKind::Partial);
    return out;
}

} // namespace detail

/// Kinds of `m` relative to `t`. Throws ModifierError if `m` does not apply.
inline ModifierKind classify(const Modifier& m, const ClassDef& t) {
    (void)apply_to_class(m, t);
    return detail::classify_members(m, t.core.specification, t.core.signature);
}

inline ModifierKind classify(const Modifier& m, const ObjectInstance& o) {
    (void)apply_to_object(m, o);
    return detail::classify_members(m, o.specification, o.signature);
}

/// `first`'s edits followed by `second`'s.
inline Modifier compose(const Modifier& first, const Modifier& second) {
    if (first.target_kind != second.target_kind)
        throw ModifierError("cannot compose '" + first.name + "' (" + std::string(to_string(first.target_kind))
                            + ") with '" + second.name + "' (" + std::string(to_string(second.target_kind)) + ")");
    Modifier out{"compose(" + first.name + ", " + second.name + ")", first.target_kind, first.edits,
                 first.target == second.target ? first.target : std::nullopt};
    out.edits.insert(out.edits.end(), second.edits.begin(), second.edits.end());
    return out;
}

} // namespace oodn
