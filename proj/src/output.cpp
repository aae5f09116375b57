#include "kfp/output.hpp"

#include "kfp/errors.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace kfp {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ValidationError("output: cannot create directory \"" + dir + "\"");
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("output: cannot open \"" + path + "\" for writing");
    out << content;
    if (!out) throw ValidationError("output: write failed for \"" + path + "\"");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("output: cannot open \"" + path + "\"");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TableWriter::TableWriter(const std::string& dir, const std::string& stem,
                         const std::vector<std::string>& columns)
    : csv_path_(dir + "/" + stem + ".csv"),
      dat_path_(dir + "/" + stem + ".dat"),
      n_cols_(columns.size()) {
    ensure_dir(dir);
    std::string csv_head, dat_head = "#";
    for (size_t i = 0; i < columns.size(); ++i) {
        if (i) csv_head += ",";
        csv_head += columns[i];
        dat_head += " " + columns[i];
    }
    csv_body_ = csv_head + "\n";
    dat_body_ = dat_head + "\n";
}

void TableWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != n_cols_)
        throw ValidationError("output: row width does not match the declared columns");
    std::string csv_line, dat_line;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) {
            csv_line += ",";
            dat_line += " ";
        }
        csv_line += cells[i];
        dat_line += cells[i];
    }
    csv_body_ += csv_line + "\n";
    dat_body_ += dat_line + "\n";
}

void TableWriter::flush() {
    if (flushed_) return;
    write_text_file(csv_path_, csv_body_);
    write_text_file(dat_path_, dat_body_);
    flushed_ = true;
}

TableWriter::~TableWriter() {
    try {
        flush();
    } catch (...) {
        // a destructor must not throw; an explicit flush() reports errors
    }
}

MatrixCache::MatrixCache(bool enabled, const std::string& dir) : enabled_(enabled), dir_(dir) {
    if (enabled_) {
        if (dir_.empty()) throw ValidationError("cache: enabled but no directory given");
        ensure_dir(dir_);
    }
}

std::string MatrixCache::path_for(const std::string& key) const {
    // FNV-1a, 64-bit: stable across runs and platforms for the file name;
    // the full key is stored inside the entry and checked on load.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : key) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return dir_ + "/" + buf + ".bin";
}

Eigen::MatrixXcd MatrixCache::get_or_compute(const std::string& key,
                                             const std::function<Eigen::MatrixXcd()>& compute) {
    hit_ = false;
    if (!enabled_) return compute();
    const std::string path = path_for(key);
    {
        std::ifstream in(path, std::ios::binary);
        if (in) {
            std::uint64_t klen = 0, rows = 0, cols = 0;
            in.read(reinterpret_cast<char*>(&klen), sizeof klen);
            std::string stored(klen, '\0');
            in.read(stored.data(), static_cast<std::streamsize>(klen));
            in.read(reinterpret_cast<char*>(&rows), sizeof rows);
            in.read(reinterpret_cast<char*>(&cols), sizeof cols);
            if (in && stored == key && rows > 0 && cols > 0 && rows * cols < (1ull << 28)) {
                Eigen::MatrixXcd m(static_cast<Eigen::Index>(rows),
                                   static_cast<Eigen::Index>(cols));
                in.read(reinterpret_cast<char*>(m.data()),
                        static_cast<std::streamsize>(rows * cols * sizeof(std::complex<double>)));
                if (in) {
                    hit_ = true;
                    ++hits_;
                    return m;
                }
            }
        }
    }
    Eigen::MatrixXcd m = compute();
    ++misses_;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cache: cannot write \"" + path + "\"");
    const std::uint64_t klen = key.size();
    const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&klen), sizeof klen);
    out.write(key.data(), static_cast<std::streamsize>(klen));
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(rows * cols * sizeof(std::complex<double>)));
    if (!out) throw ValidationError("cache: write failed for \"" + path + "\"");
    return m;
}

} // namespace kfp
