#include "ams/faultrc.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace ams {

std::string to_string(const FaultSpec& f) {
    std::ostringstream out;
    switch (f.kind) {
        case FaultKind::CrashComponent:
            out << "INJECT CRASH ON " << (f.component_task == TaskKind::I ? "ICOMPONENT" : "COMPONENT")
                << ' ' << f.target << " AFTER " << f.at << " TICKS";
            break;
        case FaultKind::CrashNode:
            out << "INJECT CRASH ON NODE " << f.target << " AFTER " << f.at << " TICKS";
            break;
        case FaultKind::RebootNode:
            out << "INJECT REBOOT ON NODE " << f.target << " AFTER " << f.at << " TICKS";
            break;
        case FaultKind::Slowdown:
            out << "INJECT SLOWDOWN ON "
                << (f.component_task == TaskKind::I ? "ICOMPONENT" : "COMPONENT") << ' ' << f.target
                << " AFTER " << f.at << " TICKS FOR " << f.duration << " TICKS FACTOR " << f.factor;
            break;
    }
    return out.str();
}

namespace {

struct Token {
    std::string text;  // uppercased
    int line;
};

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> tokens;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::string word;
        while (ls >> word) {
            std::transform(word.begin(), word.end(), word.begin(),
                           [](unsigned char c) { return std::toupper(c); });
            tokens.push_back(Token{word, lineno});
        }
    }
    return tokens;
}

class Parser {
  public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    FaultScript parse() {
        FaultScript script;
        while (pos_ < tokens_.size()) {
            script.faults.push_back(statement());
        }
        return script;
    }

  private:
    [[noreturn]] void fail(const std::string& what) const {
        int line = pos_ < tokens_.size() ? tokens_[pos_].line
                                         : (tokens_.empty() ? 1 : tokens_.back().line);
        throw ParseError(line, what);
    }

    const std::string& peek() const {
        static const std::string kEnd = "<end of input>";
        return pos_ < tokens_.size() ? tokens_[pos_].text : kEnd;
    }

    std::string take() {
        if (pos_ >= tokens_.size()) {
            fail("unexpected end of input");
        }
        return tokens_[pos_++].text;
    }

    void expect(const std::string& keyword) {
        std::string got = take();
        // The statement terminator may carry sentence punctuation
        // ("... AFTER 10000000 TICKS.").
        if (keyword == "TICKS" && got == "TICKS.") {
            return;
        }
        if (got != keyword) {
            --pos_;
            fail("expected " + keyword + ", got '" + got + "'");
        }
    }

    std::uint64_t number(const char* what) {
        std::string got = take();
        std::uint64_t out = 0;
        auto [ptr, ec] = std::from_chars(got.data(), got.data() + got.size(), out);
        if (ec != std::errc{} || ptr != got.data() + got.size()) {
            --pos_;
            fail(std::string("expected ") + what + ", got '" + got + "'");
        }
        return out;
    }

    FaultSpec statement() {
        expect("INJECT");
        std::string kind = take();
        if (kind != "CRASH" && kind != "REBOOT" && kind != "SLOWDOWN") {
            --pos_;
            fail("expected CRASH, REBOOT or SLOWDOWN, got '" + kind + "'");
        }
        expect("ON");
        std::string target_kw = take();
        if (target_kw != "COMPONENT" && target_kw != "ICOMPONENT" && target_kw != "NODE") {
            --pos_;
            fail("expected COMPONENT, ICOMPONENT or NODE, got '" + target_kw + "'");
        }
        FaultSpec spec;
        spec.target = static_cast<NodeId>(number("a target id"));
        if (peek() != "AFTER") {
            fail(kind + " requires an AFTER <n> TICKS clause");
        }
        expect("AFTER");
        spec.at = number("a tick count");
        expect("TICKS");
        if (spec.at == 0) {
            --pos_;
            fail("injection time must be > 0 ticks");
        }

        if (kind == "CRASH") {
            if (target_kw == "NODE") {
                spec.kind = FaultKind::CrashNode;
            } else {
                spec.kind = FaultKind::CrashComponent;
                spec.component_task = (target_kw == "ICOMPONENT") ? TaskKind::I : TaskKind::D;
            }
            return spec;
        }
        if (kind == "REBOOT") {
            if (target_kw != "NODE") {
                fail("REBOOT supports only ON NODE");
            }
            spec.kind = FaultKind::RebootNode;
            return spec;
        }
        // SLOWDOWN
        if (target_kw == "NODE") {
            fail("SLOWDOWN supports only ON COMPONENT");
        }
        spec.kind = FaultKind::Slowdown;
        spec.component_task = (target_kw == "ICOMPONENT") ? TaskKind::I : TaskKind::D;
        if (peek() != "FOR") {
            fail("SLOWDOWN requires FOR <n> TICKS FACTOR <f>");
        }
        expect("FOR");
        spec.duration = number("a tick count");
        expect("TICKS");
        expect("FACTOR");
        spec.factor = number("a factor");
        if (spec.duration == 0) {
            --pos_;
            fail("slowdown duration must be > 0 ticks");
        }
        if (spec.factor == 0) {
            --pos_;
            fail("slowdown factor must be >= 1");
        }
        return spec;
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

}  // namespace

FaultScript parse_faultrc(const std::string& text) {
    return Parser(tokenize(text)).parse();
}

std::string render_faultrc(const FaultScript& script) {
    std::string out;
    for (const FaultSpec& f : script.faults) {
        out += to_string(f);
        out += '\n';
    }
    return out;
}

}  // namespace ams
