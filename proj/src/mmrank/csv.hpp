// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mmrank/model.hpp"

namespace mmrank {

struct CsvLayout {
  bool header = true;            // first row names the columns
  bool ids = true;               // first column names the rows
  bool features_as_rows = false;  // default: one sample per row
};

/// Reads a numeric matrix into a Dataset with no labels. Throws DataError on
/// ragged rows or unparsable cells, naming the 1-based line and column.
Dataset read_data_csv(std::string const& path, CsvLayout const& layout = {});
Dataset parse_data_csv(std::string const& text, CsvLayout const& layout = {});

/// One label per line, optionally preceded by an id column and a header.
/// Blank cells are missing (0). A task written in {0, 1} maps 0 to -1.
LabelVector read_labels_csv(std::string const& path);
LabelVector parse_labels_csv(std::string const& text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(std::string const& path, CsvTable const& table);
std::string format_csv(CsvTable const& table);
//! Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace mmrank
