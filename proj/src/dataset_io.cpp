#include "rmt_transfer/dataset_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "rmt_transfer/errors.hpp"

namespace rmt {

static_assert(std::endian::native == std::endian::little, "binary dataset I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 5> kMagic = {'R', 'T', 'M', 'L', '1'};

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 4)) throw IoError("truncated header in " + path);
    return v;
}

}  // namespace

std::string format_double(double x) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc()) throw IoError("cannot format number");
    return std::string(buf.data(), end);
}

double parse_double(const std::string& text, const std::string& context) {
    std::size_t begin = text.find_first_not_of(" \t\r");
    std::size_t last = text.find_last_not_of(" \t\r");
    if (begin == std::string::npos) throw IoError("empty numeric field in " + context);
    const char* first = text.data() + begin;
    const char* stop = text.data() + last + 1;
    if (*first == '+') ++first;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, stop, value);
    if (ec != std::errc() || ptr != stop) throw IoError("bad number '" + text + "' in " + context);
    return value;
}

void write_dataset_csv(const LabeledDataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "label";
    for (Eigen::Index i = 0; i < data.dim(); ++i) out << ",f" << i;
    out << '\n';
    for (Eigen::Index j = 0; j < data.size(); ++j) {
        out << (data.labels[j] > 0 ? "1" : "-1");
        for (Eigen::Index i = 0; i < data.dim(); ++i) out << ',' << format_double(data.features(i, j));
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

LabeledDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("missing header in " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.empty() || header[0] != "label") throw IoError("header of " + path + " must start with 'label'");
    const std::size_t p = header.size() - 1;
    for (std::size_t i = 0; i < p; ++i)
        if (header[i + 1] != "f" + std::to_string(i)) throw IoError("unexpected column '" + header[i + 1] + "' in " + path);

    std::vector<double> values;
    std::vector<double> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        const std::string where = path + ":" + std::to_string(line_no);
        while (std::getline(ss, cell, ',')) {
            double v = parse_double(cell, where);
            if (col == 0) {
                if (v != 1.0 && v != -1.0) throw IoError("label must be -1 or 1 at " + where);
                labels.push_back(v);
            } else {
                values.push_back(v);
            }
            ++col;
        }
        if (col != p + 1) throw IoError("expected " + std::to_string(p + 1) + " fields at " + where);
    }
    const auto m = static_cast<Eigen::Index>(labels.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(p), m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (std::size_t i = 0; i < p; ++i) x(static_cast<Eigen::Index>(i), j) = values[static_cast<std::size_t>(j) * p + i];
    return LabeledDataset(std::move(x), Eigen::Map<Eigen::VectorXd>(labels.data(), m));
}

void write_dataset_binary(const LabeledDataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(kMagic.data(), kMagic.size());
    write_u32(out, static_cast<std::uint32_t>(data.dim()));
    write_u32(out, static_cast<std::uint32_t>(data.size()));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = data.features;
    out.write(reinterpret_cast<const char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(double)));
    for (Eigen::Index j = 0; j < data.size(); ++j) {
        auto label = static_cast<std::int8_t>(data.labels[j] > 0 ? 1 : -1);
        out.write(reinterpret_cast<const char*>(&label), 1);
    }
    if (!out) throw IoError("write failed: " + path);
}

LabeledDataset read_dataset_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::array<char, 5> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw IoError(path + " is not an RTML1 file");
    const std::uint32_t p = read_u32(in, path);
    const std::uint32_t m = read_u32(in, path);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(p, m);
    if (!in.read(reinterpret_cast<char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(double))))
        throw IoError("truncated feature block in " + path);
    std::vector<std::int8_t> raw(m);
    if (m > 0 && !in.read(reinterpret_cast<char*>(raw.data()), m)) throw IoError("truncated label block in " + path);
    Eigen::VectorXd y(m);
    for (std::uint32_t j = 0; j < m; ++j) {
        if (raw[j] != 1 && raw[j] != -1) throw IoError("label must be -1 or 1 in " + path);
        y[j] = raw[j];
    }
    return LabeledDataset(Eigen::MatrixXd(rows), std::move(y));
}

LabeledDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::array<char, 5> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() == 5 && magic == kMagic) return read_dataset_binary(path);
    return read_dataset_csv(path);
}

}  // namespace rmt
