#include <gtest/gtest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "rmt_transfer/dataset_io.hpp"
#include "rmt_transfer/errors.hpp"
#include "rmt_transfer/gmm_data.hpp"
#include "rmt_transfer/rng.hpp"

using namespace rmt;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("rmt_io_" + name)).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

LabeledDataset small(std::uint64_t seed) {
    RandomSource r(seed);
    return sample_class_data(9, Eigen::VectorXd::Constant(3, 0.25), r);
}

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(-2.0), "-2");
    EXPECT_EQ(format_double(1e-300), "1e-300");
    RandomSource r(1);
    for (int i = 0; i < 1000; ++i) {
        const double x = r.normal() * std::pow(10.0, static_cast<double>(r.below(40)) - 20.0);
        EXPECT_EQ(parse_double(format_double(x), "test"), x);
    }
    EXPECT_THROW(parse_double("1.5x", "test"), IoError);
    EXPECT_THROW(parse_double("", "test"), IoError);
}

TEST(DatasetCsv, RoundTripIsExact) {
    const LabeledDataset d = small(2);
    const std::string path = temp_path("rt.csv");
    write_dataset_csv(d, path);
    const LabeledDataset back = read_dataset_csv(path);
    EXPECT_EQ(back.features, d.features);
    EXPECT_EQ(back.labels, d.labels);
    EXPECT_EQ(read_bytes(path).substr(0, 15), "label,f0,f1,f2\n");
    std::remove(path.c_str());
}

TEST(DatasetCsv, RejectsMalformedFiles) {
    const std::string path = temp_path("bad.csv");
    write_text(path, "label,f1\n1,0.5\n");
    EXPECT_THROW(read_dataset_csv(path), IoError);
    write_text(path, "label,f0\n2,0.5\n");
    EXPECT_THROW(read_dataset_csv(path), IoError);
    write_text(path, "label,f0,f1\n1,0.5\n");
    EXPECT_THROW(read_dataset_csv(path), IoError);
    std::remove(path.c_str());
    EXPECT_THROW(read_dataset_csv(temp_path("does_not_exist.csv")), IoError);
}

TEST(DatasetBinary, LayoutIsRowMajorLittleEndian) {
    Eigen::MatrixXd x(2, 3);
    x << 1, 2, 3, 4, 5, 6;
    Eigen::VectorXd y(3);
    y << -1, 1, 1;
    const std::string path = temp_path("layout.bin");
    write_dataset_binary(LabeledDataset(x, y), path);
    const std::string bytes = read_bytes(path);
    ASSERT_EQ(bytes.size(), 5u + 8u + 6u * 8u + 3u);
    EXPECT_EQ(bytes.substr(0, 5), "RTML1");
    EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 2u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[9]), 3u);
    double second;
    std::memcpy(&second, bytes.data() + 13 + 8, 8);
    EXPECT_EQ(second, 2.0);  // feature 0 of sample 1
    double fourth;
    std::memcpy(&fourth, bytes.data() + 13 + 24, 8);
    EXPECT_EQ(fourth, 4.0);  // feature 1 of sample 0
    EXPECT_EQ(static_cast<signed char>(bytes[13 + 48]), -1);
    std::remove(path.c_str());
}

TEST(DatasetBinary, RoundTripAndDetection) {
    const LabeledDataset d = small(3);
    const std::string bin = temp_path("rt.bin"), csv = temp_path("rt2.csv");
    write_dataset_binary(d, bin);
    write_dataset_csv(d, csv);
    EXPECT_EQ(load_dataset(bin).features, d.features);
    EXPECT_EQ(load_dataset(csv).features, d.features);
    const std::string bytes = read_bytes(bin);
    write_text(bin, bytes.substr(0, bytes.size() - 4));
    EXPECT_THROW(read_dataset_binary(bin), IoError);
    std::remove(bin.c_str());
    std::remove(csv.c_str());
}
