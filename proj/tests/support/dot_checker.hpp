#pragma once

// Recursive-descent checker for the DOT language (graph/digraph, node, edge
// and attribute statements; no subgraphs or ports). Throws on the first
// grammar violation and reports node declarations and edges.

#include <cctype>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace oodn::testing {

struct DotGraph {
    bool directed = false;
    std::string name;
    std::map<std::string, std::map<std::string, std::string>> nodes;  // declared nodes
    struct Edge {
        std::string from, to;
        std::map<std::string, std::string> attrs;
    };
    std::vector<Edge> edges;
};

class DotChecker {
public:
    explicit DotChecker(std::string text) : s_(std::move(text)) {}

    DotGraph parse() {
        next();
        DotGraph g;
        if (keyword("strict")) next();
        if (keyword("digraph")) g.directed = true;
        else if (!keyword("graph")) fail("expected 'graph' or 'digraph'");
        next();
        if (tok_.kind == Tok::Id) {
            g.name = tok_.text;
            next();
        }
        expect("{");
        while (!is("}")) {
            statement(g);
            if (is(";")) next();
        }
        next();
        if (tok_.kind != Tok::End) fail("trailing input");
        return g;
    }

private:
    enum class Tok { Id, Punct, End };
    struct Token {
        Tok kind = Tok::End;
        std::string text;
        bool quoted = false;
    };

    [[noreturn]] void fail(const std::string& msg) const {
        throw std::runtime_error("DOT offset " + std::to_string(pos_) + ": " + msg + " near '" + tok_.text + "'");
    }

    void skip_space() {
        while (pos_ < s_.size()) {
            if (std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            else if (s_.compare(pos_, 2, "//") == 0) pos_ = s_.find('\n', pos_) == std::string::npos ? s_.size() : s_.find('\n', pos_);
            else if (s_.compare(pos_, 2, "/*") == 0) {
                auto end = s_.find("*/", pos_ + 2);
                if (end == std::string::npos) fail("unterminated comment");
                pos_ = end + 2;
            } else break;
        }
    }

    void next() {
        skip_space();
        tok_ = {};
        if (pos_ >= s_.size()) return;
        char c = s_[pos_];
        if (c == '"') {
            std::string out;
            ++pos_;
            while (true) {
                if (pos_ >= s_.size()) fail("unterminated string");
                char d = s_[pos_++];
                if (d == '"') break;
                if (d == '\\' && pos_ < s_.size()) {
                    char e = s_[pos_++];
                    if (e == '"') out += '"';
                    else {
                        out += '\\';
                        out += e;
                    }
                    continue;
                }
                out += d;
            }
            tok_ = {Tok::Id, out, true};
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t b = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            tok_ = {Tok::Id, s_.substr(b, pos_ - b), false};
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || (c == '-' && pos_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
            std::size_t b = pos_++;
            while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
            tok_ = {Tok::Id, s_.substr(b, pos_ - b), false};
            return;
        }
        if (s_.compare(pos_, 2, "->") == 0 || s_.compare(pos_, 2, "--") == 0) {
            tok_ = {Tok::Punct, s_.substr(pos_, 2), false};
            pos_ += 2;
            return;
        }
        if (std::string("{}[];,=:").find(c) != std::string::npos) {
            tok_ = {Tok::Punct, std::string(1, c), false};
            ++pos_;
            return;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    bool is(const char* p) const { return tok_.kind == Tok::Punct && tok_.text == p; }
    bool keyword(const char* k) const {
        if (tok_.kind != Tok::Id || tok_.quoted || tok_.text.size() != std::string(k).size()) return false;
        for (std::size_t i = 0; i < tok_.text.size(); ++i) {
            if (std::tolower(static_cast<unsigned char>(tok_.text[i])) != k[i]) return false;
        }
        return true;
    }
    void expect(const char* p) {
        if (!is(p)) fail(std::string("expected '") + p + "'");
        next();
    }
    std::string id() {
        if (tok_.kind != Tok::Id) fail("expected an ID");
        std::string t = tok_.text;
        next();
        return t;
    }

    std::map<std::string, std::string> attr_lists() {
        std::map<std::string, std::string> out;
        while (is("[")) {
            next();
            while (!is("]")) {
                std::string k = id();
                expect("=");
                out[k] = id();
                if (is(",") || is(";")) next();
            }
            next();
        }
        return out;
    }

    void statement(DotGraph& g) {
        if (keyword("graph") || keyword("node") || keyword("edge")) {
            next();
            if (!is("[")) fail("expected attribute list");
            attr_lists();
            return;
        }
        if (keyword("subgraph") || is("{")) fail("subgraphs are not supported by this checker");
        std::string first = id();
        if (is("=")) {
            next();
            id();
            return;
        }
        if (is("->") || is("--")) {
            std::vector<std::string> chain{first};
            while (is("->") || is("--")) {
                if (is("->") != g.directed) fail("edge operator does not match graph type");
                next();
                chain.push_back(id());
            }
            auto attrs = attr_lists();
            for (std::size_t i = 0; i + 1 < chain.size(); ++i) g.edges.push_back({chain[i], chain[i + 1], attrs});
            return;
        }
        g.nodes[first] = attr_lists();
    }

    std::string s_;
    std::size_t pos_ = 0;
    Token tok_;
};

inline DotGraph parse_dot(const std::string& text) { return DotChecker(text).parse(); }

} // namespace oodn::testing
