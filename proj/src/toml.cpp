#include "fiml/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fiml/errors.hpp"

namespace fiml {

double TomlValue::as_number(const std::string& context) const {
    if (kind == Kind::Float) return number;
    if (kind == Kind::Integer) return static_cast<double>(integer);
    throw ParseError(context + ": expected a number");
}

long long TomlValue::as_integer(const std::string& context) const {
    if (kind == Kind::Integer) return integer;
    throw ParseError(context + ": expected an integer");
}

const std::string& TomlValue::as_string(const std::string& context) const {
    if (kind == Kind::String) return str;
    throw ParseError(context + ": expected a string");
}

bool TomlValue::as_boolean(const std::string& context) const {
    if (kind == Kind::Boolean) return boolean;
    throw ParseError(context + ": expected a boolean");
}

namespace {

struct Cursor {
    const std::string& text;
    std::size_t pos = 0;
    const std::string& source;
    std::size_t line;

    [[noreturn]] void fail(const std::string& msg) const {
        std::ostringstream out;
        out << source << ":" << line << ": " << msg;
        throw ParseError(out.str());
    }
    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    void skip_ws() {
        while (!done() && (peek() == ' ' || peek() == '\t')) ++pos;
    }
};

bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

std::string parse_basic_string(Cursor& cur) {
    ++cur.pos; // opening quote
    std::string out;
    while (true) {
        if (cur.done()) cur.fail("unterminated string");
        char c = cur.text[cur.pos++];
        if (c == '"') return out;
        if (c == '\\') {
            if (cur.done()) cur.fail("unterminated escape");
            char e = cur.text[cur.pos++];
            switch (e) {
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                default: cur.fail(std::string("unsupported escape '\\") + e + "'");
            }
        } else {
            out.push_back(c);
        }
    }
}

TomlValue parse_scalar(Cursor& cur);

TomlValue parse_array(Cursor& cur) {
    TomlValue v;
    v.kind = TomlValue::Kind::Array;
    ++cur.pos; // '['
    cur.skip_ws();
    if (!cur.done() && cur.peek() == ']') {
        ++cur.pos;
        return v;
    }
    while (true) {
        cur.skip_ws();
        if (cur.done()) cur.fail("unterminated array");
        if (cur.peek() == '[') cur.fail("nested arrays are not supported");
        v.array.push_back(parse_scalar(cur));
        cur.skip_ws();
        if (cur.done()) cur.fail("unterminated array");
        char c = cur.text[cur.pos++];
        if (c == ']') return v;
        if (c != ',') cur.fail("expected ',' or ']' in array");
    }
}

TomlValue parse_scalar(Cursor& cur) {
    TomlValue v;
    char c = cur.peek();
    if (c == '"') {
        v.kind = TomlValue::Kind::String;
        v.str = parse_basic_string(cur);
        return v;
    }
    // bare token up to delimiter
    std::size_t start = cur.pos;
    while (!cur.done()) {
        char t = cur.peek();
        if (t == ',' || t == ']' || t == '#' || t == ' ' || t == '\t') break;
        ++cur.pos;
    }
    std::string tok = cur.text.substr(start, cur.pos - start);
    if (tok.empty()) cur.fail("expected a value");
    if (tok == "true" || tok == "false") {
        v.kind = TomlValue::Kind::Boolean;
        v.boolean = (tok == "true");
        return v;
    }
    // integer first: all digits with optional sign
    {
        long long iv = 0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
        if (res.ec == std::errc{} && res.ptr == tok.data() + tok.size()) {
            v.kind = TomlValue::Kind::Integer;
            v.integer = iv;
            return v;
        }
    }
    {
        double dv = 0.0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), dv);
        if (res.ec == std::errc{} && res.ptr == tok.data() + tok.size()) {
            v.kind = TomlValue::Kind::Float;
            v.number = dv;
            return v;
        }
    }
    cur.fail("cannot parse value '" + tok + "'");
}

} // namespace

TomlDocument parse_toml(const std::string& text, const std::string& source_name) {
    TomlDocument doc;
    doc[""];
    std::string section;
    std::istringstream stream(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        Cursor cur{line, 0, source_name, lineno};
        cur.skip_ws();
        if (cur.done() || cur.peek() == '#') continue;
        if (cur.peek() == '[') {
            ++cur.pos;
            std::size_t start = cur.pos;
            while (!cur.done() && cur.peek() != ']') ++cur.pos;
            if (cur.done()) cur.fail("unterminated section header");
            std::string name = line.substr(start, cur.pos - start);
            ++cur.pos;
            cur.skip_ws();
            if (!cur.done() && cur.peek() != '#') cur.fail("trailing text after section header");
            if (name.empty()) cur.fail("empty section name");
            for (char c : name)
                if (!is_bare_key_char(c)) cur.fail("invalid section name '" + name + "'");
            if (doc.count(name)) cur.fail("duplicate section [" + name + "]");
            doc[name];
            section = name;
            continue;
        }
        // key = value
        std::size_t start = cur.pos;
        while (!cur.done() && is_bare_key_char(cur.peek())) ++cur.pos;
        std::string key = line.substr(start, cur.pos - start);
        if (key.empty()) cur.fail("expected a key");
        cur.skip_ws();
        if (cur.done() || cur.peek() != '=') cur.fail("expected '=' after key '" + key + "'");
        ++cur.pos;
        cur.skip_ws();
        if (cur.done()) cur.fail("missing value for key '" + key + "'");
        TomlValue value =
            (cur.peek() == '[') ? parse_array(cur) : parse_scalar(cur);
        cur.skip_ws();
        if (!cur.done() && cur.peek() != '#') cur.fail("trailing text after value for '" + key + "'");
        auto& table = doc[section];
        if (table.count(key)) cur.fail("duplicate key '" + key + "'");
        table.emplace(key, std::move(value));
    }
    return doc;
}

TomlDocument parse_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_toml(buf.str(), path);
}

} // namespace fiml
