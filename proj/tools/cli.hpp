#pragma once

// Command-line front end. `run` is the whole program minus process setup so
// tests can drive it with captured streams.

#include <oodn/oodn.hpp>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace oodn::cli {

enum ExitCode : int { Ok = 0, Absent = 1, Usage = 2 };

/// Raised for bad arguments that CLI11 cannot see (unknown nodes, bad patterns).
class UsageError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline std::string number(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

inline std::string magnitude(const Magnitude& m) {
    if (const auto* d = std::get_if<double>(&m)) return number(*d);
    std::string out = "[";
    const auto& l = std::get<NumberList>(m);
    for (std::size_t i = 0; i < l.size(); ++i) out += (i ? ", " : "") + number(l[i]);
    return out + "]";
}

inline std::string describe(const Property& p) {
    if (const auto* q = p.quantitative()) {
        return q->value ? q->name + " = " + magnitude(*q->value) + " " + q->units : q->name + " [" + q->units + "]";
    }
    const auto& q = *p.qualitative();
    std::string out = q.name;
    if (q.verification) out += " := " + print(*q.verification);
    if (q.degree) out += (q.verification ? ", degree " : " degree ") + number(*q.degree);
    return out;
}

inline std::string describe(const Method& m) {
    std::string out = m.name + "(";
    for (std::size_t i = 0; i < m.parameters.size(); ++i) out += (i ? ", " : "") + m.parameters[i];
    out += ")";
    return out + (m.body ? " = " + print(*m.body) : " abstract");
}

inline void members(std::ostream& out, const Specification& spec, const Signature& sig, const char* indent) {
    for (const auto& p : spec) out << indent << "property " << describe(p) << "\n";
    for (const auto& m : sig) out << indent << "method " << describe(m) << "\n";
}

inline void report(std::ostream& out, const ClassDef& c) {
    out << "class " << c.name << (c.is_homogeneous() ? "" : " (inhomogeneous)") << "\n";
    out << "  core:" << (c.core.empty() ? " none" : "") << "\n";
    members(out, c.core.specification, c.core.signature, "    ");
    for (const auto& pr : c.projections) {
        out << "  projection " << pr.source << ":\n";
        members(out, pr.specification, pr.signature, "    ");
    }
}

inline void report(std::ostream& out, const ObjectInstance& o) {
    out << "object " << o.label() << "\n";
    members(out, o.specification, o.signature, "  ");
}

inline void report(std::ostream& out, const Network& n, const NodeRef& r) {
    if (r.kind == NodeKind::Class) report(out, n.cls(r));
    else report(out, n.object(r));
    auto edges = n.edges(r);
    if (!edges.empty()) out << "relations:\n";
    for (const auto& e : edges) out << "  " << to_string(e) << "\n";
}

inline Json node_json(const Network& n, const NodeRef& r) {
    Json j = to_json(r);
    j["definition"] = r.kind == NodeKind::Class ? to_json(n.cls(r)) : to_json(n.object(r));
    return j;
}

/// "class:X" / "object:X" force the kind; a bare name is a class if one
/// exists, otherwise an object label such as "A" or "A#2".
inline NodeRef resolve(const Network& n, const std::string& name) {
    NodeRef r;
    if (name.starts_with("class:")) r = NodeRef::cls(name.substr(6));
    else if (name.starts_with("object:")) r = NodeRef::parse_object(name.substr(7));
    else if (n.find_class(name)) r = NodeRef::cls(name);
    else r = NodeRef::parse_object(name);
    if (!n.contains(r)) throw UsageError("no node named '" + name + "'");
    return r;
}

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

struct Pattern {
    std::string op;
    std::vector<std::string> args;
};

/// `op(arg, ...)` where arguments may themselves contain balanced parentheses.
inline Pattern parse_pattern(std::string_view text) {
    auto open = text.find('(');
    std::string_view body = trim(text).ends_with(')') && open != std::string_view::npos
                                ? text.substr(open + 1, text.rfind(')') - open - 1)
                                : std::string_view{};
    if (body.data() == nullptr) throw UsageError("pattern must look like name(arguments): '" + std::string(text) + "'");
    Pattern p{trim(text.substr(0, open)), {}};
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        char c = i < body.size() ? body[i] : ',';
        if (c == '(') ++depth;
        else if (c == ')' && --depth < 0) throw UsageError("unbalanced parentheses in pattern");
        else if (c == ',' && depth == 0) {
            p.args.push_back(trim(body.substr(start, i - start)));
            start = i + 1;
        }
    }
    if (depth != 0) throw UsageError("unbalanced parentheses in pattern");
    if (p.args.size() == 1 && p.args[0].empty()) p.args.clear();
    return p;
}

inline Direction parse_direction(const std::string& s) {
    if (s == "out") return Direction::Out;
    if (s == "in") return Direction::In;
    if (s == "both") return Direction::Both;
    throw UsageError("direction must be out, in or both, not '" + s + "'");
}

/// Writes via a sibling temporary and a rename so readers never see a
/// half-written document.
inline void write_atomically(const std::filesystem::path& path, const std::string& text) {
    namespace fs = std::filesystem;
    fs::path tmp = path;
    tmp += ".tmp-" + std::to_string(std::hash<std::string>{}(path.string() + text));
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write '" + tmp.string() + "'");
        f << text;
        f.flush();
        if (!f) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error("cannot write '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("cannot replace '" + path.string() + "'");
    }
}

inline Json refs_json(const std::vector<NodeRef>& refs) {
    Json a = Json::array();
    for (const auto& r : refs) a.push_back(to_json(r));
    return a;
}

inline Json relations_json(const std::vector<Relation>& rels) {
    Json a = Json::array();
    for (const auto& r : rels) a.push_back(to_json(r));
    return a;
}

} // namespace detail

/// Parses `args` (without the program name) and executes one command.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Object-oriented dynamic networks: load, transform, infer and export.", "oodn"};
    app.require_subcommand(1, 1);
    bool json = false;
    app.add_flag("--json", json, "Machine-readable output");

    std::string file, node, op_name, modifier, target, pattern, out_file, as_name;
    std::vector<std::string> operands;
    double threshold = 1.0;
    bool no_dedup = false;
    std::optional<unsigned> clone_index;

    auto* validate = app.add_subcommand("validate", "Load a network and check its invariants");
    auto* show = app.add_subcommand("show", "Summarize a network or describe one node");
    auto* op = app.add_subcommand("op", "Apply an exploiter (union, intersection, difference, symmetric-difference, clone)");
    auto* modify = app.add_subcommand("modify", "Apply a declared modifier to a class or object");
    auto* infer = app.add_subcommand("infer", "Infer a-kind-of and instance-of relations");
    auto* query = app.add_subcommand("query", "Traverse relations");
    auto* dot = app.add_subcommand("export-dot", "Print the network as a DOT digraph");

    for (auto* sc : {validate, show, op, modify, infer, query, dot}) {
        sc->add_option("file", file, "Network document (.oodn.json)")->required();
        sc->add_flag("--json", json, "Machine-readable output");
    }
    show->add_option("node", node, "Class name or object label");
    op->add_option("exploiter", op_name)->required();
    op->add_option("operands", operands, "Class names or object labels")->required();
    modify->add_option("modifier", modifier)->required();
    modify->add_option("target", target)->required();
    for (auto* sc : {op, modify}) {
        sc->add_option("--as", as_name, "Name for a newly created result class");
        sc->add_flag("--no-dedup", no_dedup, "Always create a new node, even if an identical one exists");
    }
    op->add_option("--index", clone_index, "Clone index (clone only)")->check(CLI::PositiveNumber);
    infer->add_option("--threshold", threshold, "Satisfaction degree required for instance-of")
        ->check(CLI::Range(0.0, 1.0));
    query->add_option("pattern", pattern,
                      "neighbors(node[, kind[, out|in|both]]), reachable(node, kind), "
                      "instances-of(class) or subclasses-of(class)")
        ->required();
    for (auto* sc : {op, modify, infer}) sc->add_option("--out", out_file, "Write the updated network here");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return Usage;
    }

    auto save = [&](const Network& n) {
        if (!out_file.empty()) detail::write_atomically(out_file, save_network(n));
    };

    try {
        Network n = load_network_file(file);

        if (validate->parsed()) {
            n.validate();
            if (json) {
                out << Json{{"valid", true},
                            {"classes", n.classes().size()},
                            {"objects", n.objects().size()},
                            {"modifiers", n.modifiers().size()},
                            {"relations", n.relations().size()}}
                           .dump(2)
                    << "\n";
            } else {
                out << file << ": valid (" << n.classes().size() << " classes, " << n.objects().size() << " objects, "
                    << n.modifiers().size() << " modifiers, " << n.relations().size() << " relations)\n";
            }
            return Ok;
        }

        if (show->parsed()) {
            if (!node.empty()) {
                NodeRef r = detail::resolve(n, node);
                if (json) {
                    Json j = detail::node_json(n, r);
                    j["relations"] = detail::relations_json(n.edges(r));
                    out << j.dump(2) << "\n";
                } else {
                    detail::report(out, n, r);
                }
            } else if (json) {
                out << save_network(n);
            } else {
                out << "exploiters:";
                for (auto e : n.exploiters()) out << " " << to_string(e);
                out << "\n";
                for (const auto& c : n.classes()) detail::report(out, c);
                for (const auto& o : n.objects()) detail::report(out, o);
                for (const auto& m : n.modifiers()) {
                    out << "modifier " << m.name << " on " << to_string(m.target_kind)
                        << (m.target ? " " + *m.target : std::string()) << ":";
                    for (const auto& f : m.edits) out << " " << edit_name(f);
                    out << "\n";
                }
                for (const auto& r : n.relations()) out << "relation " << to_string(r) << "\n";
            }
            return Ok;
        }

        if (op->parsed()) {
            auto which = parse_exploiter(op_name);
            if (!which) throw UsageError("unknown exploiter '" + op_name + "'");
            std::vector<NodeRef> refs;
            for (const auto& o : operands) refs.push_back(detail::resolve(n, o));
            ApplyOptions opts{.dedup = !no_dedup,
                              .result_name = as_name.empty() ? std::nullopt : std::optional(as_name),
                              .clone_index = clone_index};
            auto app_result = n.apply_exploiter(*which, refs, opts);
            if (!app_result.result) {
                if (json) out << Json{{"result", nullptr}, {"reason", app_result.reason}}.dump(2) << "\n";
                else if (app_result.reason.find("does not exist") != std::string::npos) out << app_result.reason << "\n";
                else out << "result does not exist: " << app_result.reason << "\n";
                return Absent;
            }
            const Network& m = app_result.network;
            if (json) {
                Json j = detail::node_json(m, *app_result.result);
                j["created"] = app_result.created;
                j["objects"] = detail::refs_json(app_result.objects);
                out << Json{{"result", j}}.dump(2) << "\n";
            } else {
                out << (app_result.created ? "created " : "existing ") << to_string(*app_result.result) << "\n";
                if (app_result.result->kind == NodeKind::Class) detail::report(out, m.cls(*app_result.result));
                else detail::report(out, m.object(*app_result.result));
                for (const auto& o : app_result.objects) out << "member " << o.label() << "\n";
            }
            save(m);
            return Ok;
        }

        if (modify->parsed()) {
            NodeRef t = detail::resolve(n, target);
            const Modifier* mod = n.find_modifier(modifier);
            if (!mod) throw UsageError("unknown modifier '" + modifier + "'");
            std::optional<ModifierKind> kind;
            if (t.kind == NodeKind::Object) kind = classify(*mod, n.object(t));
            else if (n.cls(t).is_homogeneous()) kind = classify(*mod, n.cls(t));
            auto res = n.apply_modifier(modifier, t,
                                        {.dedup = !no_dedup,
                                         .result_name = as_name.empty() ? std::nullopt : std::optional(as_name)});
            Json kinds = Json::array();
            if (kind) {
                for (auto k : kind->kinds) kinds.push_back(std::string(to_string(k)));
            }
            if (json) {
                Json j = detail::node_json(res.network, res.result);
                j["created"] = res.created;
                j["kind"] = kinds;
                out << Json{{"result", j}}.dump(2) << "\n";
            } else {
                out << (res.created ? "created " : "existing ") << to_string(res.result) << "\n";
                if (kind) {
                    out << "modifier kind:";
                    for (const auto& k : kinds) out << " " << k.get<std::string>();
                    out << "\n";
                }
                if (res.result.kind == NodeKind::Class) detail::report(out, res.network.cls(res.result));
                else detail::report(out, res.network.object(res.result));
            }
            save(res.network);
            return Ok;
        }

        if (infer->parsed()) {
            auto rels = n.infer_relations(threshold);
            if (json) out << Json{{"relations", detail::relations_json(rels)}}.dump(2) << "\n";
            else {
                for (const auto& r : rels) out << to_string(r) << "\n";
                out << rels.size() << " relations\n";
            }
            save(n.with_inferred(threshold));
            return Ok;
        }

        if (query->parsed()) {
            auto p = detail::parse_pattern(pattern);
            auto need = [&](std::size_t lo, std::size_t hi) {
                if (p.args.size() < lo || p.args.size() > hi)
                    throw UsageError(p.op + " takes " + std::to_string(lo)
                                     + (lo == hi ? "" : " to " + std::to_string(hi)) + " arguments");
            };
            std::vector<NodeRef> refs;
            if (p.op == "neighbors") {
                need(1, 3);
                std::optional<RelationKind> kind;
                if (p.args.size() > 1 && p.args[1] != "*") kind = parse_relation_kind(p.args[1]);
                Direction dir = p.args.size() > 2 ? detail::parse_direction(p.args[2]) : Direction::Both;
                refs = n.neighbors(detail::resolve(n, p.args[0]), kind, dir);
            } else if (p.op == "reachable") {
                need(2, 2);
                refs = n.reachable(detail::resolve(n, p.args[0]), parse_relation_kind(p.args[1]));
            } else if (p.op == "instances-of" || p.op == "instancesOf") {
                need(1, 1);
                refs = n.instances_of(detail::resolve(n, p.args[0]));
            } else if (p.op == "subclasses-of" || p.op == "subclassesOf") {
                need(1, 1);
                refs = n.subclasses_of(detail::resolve(n, p.args[0]));
            } else {
                throw UsageError("unknown query '" + p.op + "'");
            }
            if (json) out << detail::refs_json(refs).dump(2) << "\n";
            else {
                for (const auto& r : refs) out << to_string(r) << "\n";
            }
            return Ok;
        }

        if (dot->parsed()) {
            out << export_dot(n);
            return Ok;
        }
    } catch (const LoadError& e) {
        err << "oodn: " << file << ": " << e.what() << "\n";
        return Usage;
    } catch (const Error& e) {
        err << "oodn: " << e.what() << "\n";
        return Usage;
    }
    return Usage;
}

} // namespace oodn::cli
