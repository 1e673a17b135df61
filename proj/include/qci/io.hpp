#pragma once

/* Artifact plumbing: strict JSON field access, CSV text, content hashes and
   atomic file writes. */

#include "qci/error.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace qci::io {

using json = nlohmann::json;

/// 17 significant digits, so every double round-trips and hashes are stable.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "true" : "false"; }

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<std::string> row) {
        require(row.size() == header_.size(), "CSV row width does not match the header");
        rows_.push_back(std::move(row));
    }
    std::size_t size() const { return rows_.size(); }
    const std::vector<std::string>& header() const { return header_; }

    /// Comma separated, LF line endings; cells holding commas or quotes are quoted.
    std::string text() const {
        std::string out;
        auto line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += quote(cells[i]);
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

private:
    static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline std::string hex(const unsigned char* p, unsigned n) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (unsigned i = 0; i < n; ++i) {
        s += digits[p[i] >> 4];
        s += digits[p[i] & 15];
    }
    return s;
}

/// Git blob id: sha1("blob <size>\0" + content).
inline std::string git_blob_hash(const std::string& content) {
    const std::string head = "blob " + std::to_string(content.size()) + std::string(1, '\0');
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    require(ctx != nullptr, "cannot allocate a digest context");
    bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 && EVP_DigestUpdate(ctx, head.data(), head.size()) == 1 &&
              EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 && EVP_DigestFinal_ex(ctx, md, &len) == 1;
    EVP_MD_CTX_free(ctx);
    require(ok, "digest failed");
    return hex(md, len);
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorCode::ConfigError, "cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes to a sibling temporary file and renames it into place.
inline void atomic_write(const std::filesystem::path& p, const std::string& content) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::PreconditionViolation, "cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) fail(ErrorCode::PreconditionViolation, "write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, p);
}

/// Read access to one JSON object that remembers which keys were used, so
/// unknown keys can be rejected with their full path.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(ErrorCode::ConfigError, where() + ": expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        if (!has(key)) fail(ErrorCode::ConfigError, where(key) + ": missing required key");
        used_.insert(key);
        return j_.at(key);
    }

    template <class T>
    T get(const std::string& key) {
        const json& v = raw(key);
        try {
            check_kind<T>(v, key);
            return v.get<T>();
        } catch (const json::exception& e) {
            fail(ErrorCode::ConfigError, where(key) + ": " + e.what());
        }
    }

    template <class T>
    T get_or(const std::string& key, T fallback) {
        return has(key) ? get<T>(key) : fallback;
    }

    Fields child(const std::string& key) { return Fields(raw(key), where(key)); }

    std::string where(const std::string& key = "") const {
        if (key.empty()) return path_.empty() ? "<root>" : path_;
        return path_.empty() ? key : path_ + "." + key;
    }

    /// ConfigError naming the first key that was never read.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) fail(ErrorCode::ConfigError, where(it.key()) + ": unknown key");
    }

private:
    template <class T>
    void check_kind(const json& v, const std::string& key) const {
        bool ok = true;
        if constexpr (std::is_same_v<T, bool>) ok = v.is_boolean();
        else if constexpr (std::is_integral_v<T>) ok = v.is_number_integer();
        else if constexpr (std::is_floating_point_v<T>) ok = v.is_number();
        else if constexpr (std::is_same_v<T, std::string>) ok = v.is_string();
        if (!ok) fail(ErrorCode::ConfigError, where(key) + ": wrong type");
    }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

} // namespace qci::io
