/**
 * Generates the C++ driver translation unit that wraps a generated model.
 *
 * The driver reads a headerless CSV of feature rows, calls the model's
 * `predict(const float*, float*)` once per row, writes one class vector per
 * input row to the output CSV, and reports the mean wall-clock latency per
 * observation over `repeat` full passes. Predictions are captured on the
 * first pass only, so the timing loop cannot perturb the outputs.
 */

export interface ModelManifest {
  n_trees: number;
  total_nodes: number;
  n_classes: number;
  n_features: number;
  expected_size_bytes: number;
}

export function generateDriverSource(manifest: ModelManifest): string {
  return `// Generated harness driver. Do not edit.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

extern "C" void predict(const float* x, float* out);

static const int kNumClasses = ${manifest.n_classes};
static const int kMinFeatures = ${manifest.n_features};

static bool parseRow(const std::string& line, std::vector<float>& row) {
    row.clear();
    const char* p = line.c_str();
    char* end = nullptr;
    while (*p != '\\0') {
        float v = std::strtof(p, &end);
        if (end == p) return false;
        row.push_back(v);
        p = end;
        if (*p == ',') ++p;
        else if (*p != '\\0' && *p != '\\r') return false;
        else if (*p == '\\r') break;
    }
    return !row.empty();
}

int main(int argc, char** argv) {
    if (argc < 3 || argc > 4) {
        std::fprintf(stderr, "usage: driver <input.csv> <output.csv> [repeat]\\n");
        return 3;
    }
    long repeat = (argc == 4) ? std::strtol(argv[3], nullptr, 10) : 1;
    if (repeat < 1) {
        std::fprintf(stderr, "error: repeat must be >= 1\\n");
        return 3;
    }

    std::FILE* in = std::fopen(argv[1], "r");
    if (!in) {
        std::fprintf(stderr, "error: cannot open input %s\\n", argv[1]);
        return 1;
    }
    std::vector<std::vector<float>> rows;
    std::string line;
    int ch;
    while (true) {
        ch = std::fgetc(in);
        if (ch == EOF || ch == '\\n') {
            if (!line.empty()) {
                std::vector<float> row;
                if (!parseRow(line, row)) {
                    std::fprintf(stderr, "error: unparseable CSV row %zu\\n", rows.size() + 1);
                    std::fclose(in);
                    return 1;
                }
                rows.push_back(row);
            }
            line.clear();
            if (ch == EOF) break;
        } else {
            line.push_back(static_cast<char>(ch));
        }
    }
    std::fclose(in);

    if (rows.empty()) {
        std::fprintf(stderr, "error: input has no rows\\n");
        return 1;
    }
    const size_t width = rows[0].size();
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            std::fprintf(stderr, "error: row %zu has %zu columns, row 1 has %zu\\n",
                         r + 1, rows[r].size(), width);
            return 1;
        }
    }
    if (width < static_cast<size_t>(kMinFeatures)) {
        std::fprintf(stderr, "error: model reads feature %d but rows have only %zu columns\\n",
                     kMinFeatures - 1, width);
        return 1;
    }

    std::vector<float> outputs(rows.size() * kNumClasses, 0.0f);
    volatile float sink = 0.0f;  // keeps the repeat loop observable
    const auto started = std::chrono::steady_clock::now();
    for (long rep = 0; rep < repeat; ++rep) {
        for (size_t r = 0; r < rows.size(); ++r) {
            float* out = &outputs[r * kNumClasses];
            predict(rows[r].data(), out);
            sink += out[0];
        }
    }
    const auto finished = std::chrono::steady_clock::now();
    (void)sink;
    const double totalUs =
        std::chrono::duration<double, std::micro>(finished - started).count();

    std::FILE* outFile = std::fopen(argv[2], "w");
    if (!outFile) {
        std::fprintf(stderr, "error: cannot open output %s\\n", argv[2]);
        return 1;
    }
    for (size_t r = 0; r < rows.size(); ++r) {
        for (int c = 0; c < kNumClasses; ++c) {
            std::fprintf(outFile, c == 0 ? "%.9g" : ",%.9g",
                         static_cast<double>(outputs[r * kNumClasses + c]));
        }
        std::fputc('\\n', outFile);
    }
    std::fclose(outFile);

    std::printf("rows=%zu repeat=%ld latency_us_per_obs=%.6f\\n",
                rows.size(), repeat, totalUs / (static_cast<double>(rows.size()) * repeat));
    return 0;
}
`;
}
