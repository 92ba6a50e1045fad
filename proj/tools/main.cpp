#include "cli.hpp"

int main(int argc, char** argv)
{
    return hk::cli::main_entry(argc, argv);
}
