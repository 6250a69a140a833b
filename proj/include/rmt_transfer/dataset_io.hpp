#pragma once

#include <string>

#include "rmt_transfer/gmm_data.hpp"

namespace rmt {

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& text, const std::string& context);

// CSV: header `label,f0,f1,...`, then one sample per line.
void write_dataset_csv(const LabeledDataset& data, const std::string& path);
LabeledDataset read_dataset_csv(const std::string& path);

// Binary: magic "RTML1", u32 p, u32 m (little endian), the p x m feature matrix
// row-major as f64, then m labels as i8.
void write_dataset_binary(const LabeledDataset& data, const std::string& path);
LabeledDataset read_dataset_binary(const std::string& path);

// Picks the binary reader when the file starts with the magic bytes.
LabeledDataset load_dataset(const std::string& path);

}  // namespace rmt
