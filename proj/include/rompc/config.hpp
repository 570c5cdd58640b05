#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rompc {

/// Line-oriented `key = value` text file with `#` comments. Keys keep their
/// insertion order when written; parse errors carry line numbers.
class KeyValueFile {
public:
    KeyValueFile() = default;

    static KeyValueFile parse_string(const std::string& text, const std::string& origin = "<string>") {
        KeyValueFile kv;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos) {
                std::ostringstream oss;
                oss << origin << ":" << lineno << ": expected `key = value`, got: " << trimmed;
                throw std::runtime_error(oss.str());
            }
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty()) {
                std::ostringstream oss;
                oss << origin << ":" << lineno << ": empty key";
                throw std::runtime_error(oss.str());
            }
            kv.set(key, value);
        }
        return kv;
    }

    static KeyValueFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        return parse_string(buffer.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    void set(const std::string& key, const std::string& value) {
        if (!values_.count(key)) order_.push_back(key);
        values_[key] = value;
    }
    void set_double(const std::string& key, double v) {
        std::ostringstream oss;
        oss << std::setprecision(17) << v;
        set(key, oss.str());
    }
    void set_int(const std::string& key, long long v) { set(key, std::to_string(v)); }

    std::string get_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw std::runtime_error("missing config key: " + key);
        return it->second;
    }
    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }
    long long get_int(const std::string& key) const {
        const std::string s = get_string(key);
        try {
            std::size_t used = 0;
            long long v = std::stoll(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error("config key `" + key + "`: not an integer: " + s);
        }
    }
    long long get_int(const std::string& key, long long fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    /// Comma-separated doubles.
    std::vector<double> get_doubles(const std::string& key) const {
        std::vector<double> out;
        std::istringstream in(get_string(key));
        std::string item;
        while (std::getline(in, item, ',')) out.push_back(to_double(key, trim(item)));
        return out;
    }

    std::vector<std::string> get_strings(const std::string& key) const {
        std::vector<std::string> out;
        std::istringstream in(get_string(key));
        std::string item;
        while (std::getline(in, item, ',')) {
            const std::string t = trim(item);
            if (!t.empty()) out.push_back(t);
        }
        return out;
    }

    std::string to_string() const {
        std::ostringstream oss;
        for (const auto& key : order_) oss << key << " = " << values_.at(key) << "\n";
        return oss.str();
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write config file: " + path);
        out << to_string();
    }

    const std::vector<std::string>& keys() const { return order_; }

private:
    static std::string trim(const std::string& s) {
        const auto begin = s.find_first_not_of(" \t\r\n");
        if (begin == std::string::npos) return "";
        const auto end = s.find_last_not_of(" \t\r\n");
        return s.substr(begin, end - begin + 1);
    }

    static double to_double(const std::string& key, const std::string& s) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error("config key `" + key + "`: not a number: " + s);
        }
    }

    std::map<std::string, std::string> values_;
    std::vector<std::string> order_;
};

}  // namespace rompc
