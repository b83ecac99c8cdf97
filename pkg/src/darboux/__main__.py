from darboux.cli import main

main()
