/// @file fiml.cpp
/// @brief Command-line driver for the channel inversion toolkit.

#include <cstdio>

int main() {
    std::puts("fiml: subcommands not wired up yet");
    return 1;
}
