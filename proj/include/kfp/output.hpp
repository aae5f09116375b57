#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace kfp {

// Round-trip-exact float formatting: %.17g prints enough digits that parsing
// the text recovers the identical double, so equal runs emit equal bytes.
std::string fmt_g17(double v);

void ensure_dir(const std::string& dir);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// One tabular artifact, written twice: "<stem>.csv" (comma-separated with a
// header row) and a gnuplot-ready "<stem>.dat" mirror (space-separated, the
// header behind a '#').  Rows are emitted in call order; no buffering
// surprises, both files carry identical values.
class TableWriter {
public:
    TableWriter(const std::string& dir, const std::string& stem,
                const std::vector<std::string>& columns);
    void row(const std::vector<std::string>& cells);
    const std::string& csv_path() const { return csv_path_; }
    const std::string& dat_path() const { return dat_path_; }

private:
    std::string csv_path_, dat_path_;
    std::string csv_body_, dat_body_;
    size_t n_cols_;
    bool flushed_ = false;

public:
    ~TableWriter();
    void flush();
};

// Content-addressed store for dense complex matrices keyed by an exact
// parameter echo.  The payload is the raw little-endian bit pattern, so a
// cache hit reproduces the uncached computation bitwise.  A stored entry
// whose echoed key string does not match is treated as a miss (hash-collision
// guard).  Disabled instances just call through.
class MatrixCache {
public:
    MatrixCache() = default;
    MatrixCache(bool enabled, const std::string& dir);

    Eigen::MatrixXcd get_or_compute(const std::string& key,
                                    const std::function<Eigen::MatrixXcd()>& compute);
    bool last_was_hit() const { return hit_; }
    int hits() const { return hits_; }
    int misses() const { return misses_; }

private:
    bool enabled_ = false;
    std::string dir_;
    bool hit_ = false;
    int hits_ = 0, misses_ = 0;

    std::string path_for(const std::string& key) const;
};

} // namespace kfp
